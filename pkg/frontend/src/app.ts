// Cockpit wiring: DOM, socket, 10 Hz teleop pump, render loop.

import { KeyboardTeleop, TELEOP_RATE_HZ, TeleopStreamer, isTeleopKey } from "./input.js";
import { SceneRenderer } from "./render.js";
import {
  CockpitState,
  goalsComplete,
  initialState,
  reduce,
  selectedArmed,
} from "./state.js";
import { ServerLink } from "./net.js";

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

let state: CockpitState = initialState();
const teleop = new KeyboardTeleop();
const streamer = new TeleopStreamer();
const canvas = $("scene") as HTMLCanvasElement;
const renderer = new SceneRenderer(canvas);

const serverUrl =
  new URLSearchParams(location.search).get("server") ?? `ws://${location.hostname || "127.0.0.1"}:8080/ws`;

const link = new ServerLink(
  serverUrl,
  (msg) => {
    state = reduce(state, { kind: "message", msg, nowMs: Date.now() });
    refreshPanel();
  },
  (status) => {
    state = { ...state, connection: status };
    refreshPanel();
  },
);
link.connect();

// -- keyboard ---------------------------------------------------------------

document.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  if (isTeleopKey(ev.code)) {
    if (!selectedArmed(state)) {
      flashWarning("teleop suppressed: selected robot is disarmed");
      return;
    }
    teleop.keyDown(ev.code);
    ev.preventDefault();
  } else if (ev.code.startsWith("Digit")) {
    const idx = Number(ev.code.slice(5)) - 1;
    selectRobot(idx);
  }
});

document.addEventListener("keyup", (ev) => teleop.keyUp(ev.code));
window.addEventListener("blur", () => teleop.releaseAll());

function selectRobot(idx: number): void {
  state = reduce(state, { kind: "select", robot: idx });
  refreshPanel();
}

// 10 Hz teleop pump; the streamer handles zeroing and robot switches
setInterval(() => {
  for (const cmd of streamer.tick(state.selected, selectedArmed(state), teleop)) {
    link.send(cmd);
  }
}, 1000 / TELEOP_RATE_HZ);

// -- buttons and plan form -------------------------------------------------

($("arm") as HTMLButtonElement).onclick = () => link.send({ type: "arm", robot: state.selected });
($("disarm") as HTMLButtonElement).onclick = () => link.send({ type: "disarm", robot: state.selected });
($("guided") as HTMLButtonElement).onclick = () =>
  link.send({ type: "set_mode", robot: state.selected, mode: "GUIDED" });
($("pause") as HTMLButtonElement).onclick = () => link.send({ type: "pause" });
($("resume") as HTMLButtonElement).onclick = () => link.send({ type: "resume" });

canvas.addEventListener("click", (ev) => {
  const rect = canvas.getBoundingClientRect();
  const world = renderer.pxToWorld(state, ev.clientX - rect.left, ev.clientY - rect.top);
  if (!world || !state.frame) return;
  const robot = state.frame.robots[state.selected];
  const goal = [world[0], world[1], robot.true_position[2], 0];
  state = reduce(state, { kind: "set_goal", robot: state.selected, goal });
  refreshPanel();
});

($("plan") as HTMLButtonElement).onclick = () => {
  if (!goalsComplete(state)) {
    flashWarning("set a goal for every robot first (click the scene)");
    return;
  }
  link.send({ type: "plan", goals: state.goals as number[][] });
};

function flashWarning(text: string): void {
  state = { ...state, banner: text };
  refreshPanel();
  setTimeout(() => {
    state = reduce(state, { kind: "clear_banner" });
    refreshPanel();
  }, 2000);
}

// -- panel + render loop ------------------------------------------------------

function refreshPanel(): void {
  const robots = state.frame?.robots ?? [];
  $("robots").innerHTML = robots
    .map((r, i) => {
      const sel = i === state.selected ? "selected" : "";
      return `<div class="robot ${sel}" data-i="${i}">[${i + 1}] ${r.name} &mdash; ${r.mode}${
        r.armed ? "" : " &#9888;"
      }</div>`;
    })
    .join("");
  document.querySelectorAll<HTMLElement>(".robot").forEach((el) => {
    el.onclick = () => selectRobot(Number(el.dataset.i));
  });
  $("status").textContent =
    `${state.connection}  t=${state.frame?.t?.toFixed(1) ?? "-"}  ` +
    `plan=${state.frame?.plan.status ?? "-"} replans=${state.frame?.plan.replans ?? 0}`;
  $("banner").textContent = state.banner ?? "";
}

function loop(): void {
  renderer.draw(state, Date.now());
  requestAnimationFrame(loop);
}
loop();
