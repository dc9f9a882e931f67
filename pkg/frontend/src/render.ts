// Top-down canvas renderer: pillars, drifting hazards, robots (true pose
// solid, estimate as a ghost), active paths, selection ring.

import type { CockpitState } from "./state.js";
import { isStale } from "./state.js";

const COLORS = ["#4fc3f7", "#aed581", "#ffb74d", "#f06292", "#9575cd", "#4db6ac"];

export class SceneRenderer {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    this.ctx = ctx;
  }

  draw(state: CockpitState, nowMs: number): void {
    const { ctx, canvas } = this;
    ctx.fillStyle = "#06121f";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    if (!state.scene) {
      this.label("waiting for scene...", "#889");
      return;
    }
    const [minX, minY] = state.scene.bounds.min;
    const [maxX, maxY] = state.scene.bounds.max;
    const pad = 12;
    const scale = Math.min(
      (canvas.width - 2 * pad) / (maxX - minX),
      (canvas.height - 2 * pad) / (maxY - minY),
    );
    const toPx = (x: number, y: number): [number, number] => [
      pad + (x - minX) * scale,
      canvas.height - pad - (y - minY) * scale,
    ];

    ctx.strokeStyle = "#1d3a57";
    const [bx0, by0] = toPx(minX, minY);
    const [bx1, by1] = toPx(maxX, maxY);
    ctx.strokeRect(Math.min(bx0, bx1), Math.min(by0, by1), Math.abs(bx1 - bx0), Math.abs(by1 - by0));

    ctx.fillStyle = "#33475c";
    for (const box of state.scene.static_obstacles) {
      const [cx, cy] = toPx(box.center[0], box.center[1]);
      const w = box.half_extents[0] * 2 * scale;
      const h = box.half_extents[1] * 2 * scale;
      ctx.fillRect(cx - w / 2, cy - h / 2, w, h);
    }

    const frame = state.frame;
    if (frame) {
      ctx.fillStyle = "#b06a5b";
      for (const obs of frame.dynamic_obstacles) {
        const [cx, cy] = toPx(obs.position[0], obs.position[1]);
        ctx.beginPath();
        ctx.arc(cx, cy, Math.max(2, obs.radius * scale), 0, Math.PI * 2);
        ctx.fill();
      }

      frame.plan.paths.forEach((path, i) => {
        if (path.length < 2) return;
        ctx.strokeStyle = COLORS[i % COLORS.length] + "88";
        ctx.beginPath();
        path.forEach(([x, y], k) => {
          const [px, py] = toPx(x, y);
          if (k === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        });
        ctx.stroke();
      });

      frame.robots.forEach((robot, i) => {
        const color = COLORS[i % COLORS.length];
        const radius = state.scene!.robots[i]?.radius ?? 0.3;
        const rPx = Math.max(3, radius * scale);

        // estimate ghost
        const [ex, ey] = toPx(robot.est_position[0], robot.est_position[1]);
        ctx.strokeStyle = color + "66";
        ctx.beginPath();
        ctx.arc(ex, ey, rPx, 0, Math.PI * 2);
        ctx.stroke();

        // true pose with heading tick
        const [px, py] = toPx(robot.true_position[0], robot.true_position[1]);
        ctx.fillStyle = color;
        ctx.beginPath();
        ctx.arc(px, py, rPx, 0, Math.PI * 2);
        ctx.fill();
        ctx.strokeStyle = "#fff";
        ctx.beginPath();
        ctx.moveTo(px, py);
        ctx.lineTo(px + Math.cos(robot.true_yaw) * rPx * 1.8, py - Math.sin(robot.true_yaw) * rPx * 1.8);
        ctx.stroke();

        if (i === state.selected) {
          ctx.strokeStyle = "#ffee58";
          ctx.beginPath();
          ctx.arc(px, py, rPx + 4, 0, Math.PI * 2);
          ctx.stroke();
        }
        ctx.fillStyle = "#cfd8dc";
        ctx.font = "11px monospace";
        ctx.fillText(`${robot.name}${robot.armed ? "" : " (disarmed)"}`, px + rPx + 5, py - 4);
      });

      for (let i = 0; i < state.goals.length; i++) {
        const goal = state.goals[i];
        if (!goal) continue;
        const [gx, gy] = toPx(goal[0], goal[1]);
        ctx.strokeStyle = COLORS[i % COLORS.length];
        ctx.beginPath();
        ctx.moveTo(gx - 5, gy - 5);
        ctx.lineTo(gx + 5, gy + 5);
        ctx.moveTo(gx - 5, gy + 5);
        ctx.lineTo(gx + 5, gy - 5);
        ctx.stroke();
      }
    }

    if (state.connection !== "open") {
      this.label("DISCONNECTED", "#ef5350");
    } else if (isStale(state, nowMs)) {
      this.label("STALE (no frames > 1 s)", "#ffa726");
    }
  }

  /** Inverse of the scene transform, for click-to-set-goal. */
  pxToWorld(state: CockpitState, px: number, py: number): [number, number] | null {
    if (!state.scene) return null;
    const [minX, minY] = state.scene.bounds.min;
    const [maxX, maxY] = state.scene.bounds.max;
    const pad = 12;
    const scale = Math.min(
      (this.canvas.width - 2 * pad) / (maxX - minX),
      (this.canvas.height - 2 * pad) / (maxY - minY),
    );
    return [minX + (px - pad) / scale, minY + (this.canvas.height - pad - py) / scale];
  }

  private label(text: string, color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.font = "bold 14px monospace";
    this.ctx.fillText(text, 16, 24);
  }
}
