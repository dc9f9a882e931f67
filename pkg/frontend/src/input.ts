// Keyboard teleoperation: held keys map to six axis values in [-1000, 1000].
//   W/S -> surge +/-    A/D -> sway left/right    R/F -> heave up/down
//   Q/E -> yaw left/right.  Roll and pitch are always zero.

import type { TeleopCmd } from "./types.js";

export const TELEOP_RATE_HZ = 10;
const FULL = 1000;

const AXIS_KEYS: Record<string, [number, number]> = {
  KeyW: [0, +FULL],
  KeyS: [0, -FULL],
  KeyA: [1, +FULL],
  KeyD: [1, -FULL],
  KeyR: [2, +FULL],
  KeyF: [2, -FULL],
  KeyQ: [5, +FULL],
  KeyE: [5, -FULL],
};

export function isTeleopKey(code: string): boolean {
  return code in AXIS_KEYS;
}

export class KeyboardTeleop {
  private held = new Set<string>();

  keyDown(code: string): void {
    if (isTeleopKey(code)) this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  releaseAll(): void {
    this.held.clear();
  }

  anyHeld(): boolean {
    return this.held.size > 0;
  }

  axes(): number[] {
    const out = [0, 0, 0, 0, 0, 0];
    for (const code of this.held) {
      const [axis, value] = AXIS_KEYS[code];
      out[axis] = clampAxis(out[axis] + value);
    }
    return out;
  }
}

function clampAxis(v: number): number {
  return Math.max(-FULL, Math.min(FULL, v));
}

export function teleopCommand(robot: number, axes: number[]): TeleopCmd {
  return { type: "teleop", robot, axes };
}

export function zeroCommand(robot: number): TeleopCmd {
  return teleopCommand(robot, [0, 0, 0, 0, 0, 0]);
}

/**
 * The 10 Hz send loop decides, each tick, what teleop traffic to emit.
 * Commands go only to the selected, armed robot; releasing everything sends
 * one zeroing command then goes quiet; switching robots mid-hold zeroes the
 * old robot first and never leaks axes to it again.
 */
export class TeleopStreamer {
  private lastRobot: number | null = null;
  private wasActive = false;

  tick(selected: number, armed: boolean, teleop: KeyboardTeleop): TeleopCmd[] {
    const out: TeleopCmd[] = [];
    if (this.lastRobot !== null && this.lastRobot !== selected) {
      if (this.wasActive) out.push(zeroCommand(this.lastRobot));
      this.wasActive = false;
    }
    this.lastRobot = selected;
    if (!armed) {
      // teleop suppressed while disarmed; the UI shows a warning instead
      if (this.wasActive) {
        out.push(zeroCommand(selected));
        this.wasActive = false;
      }
      return out;
    }
    if (teleop.anyHeld()) {
      out.push(teleopCommand(selected, teleop.axes()));
      this.wasActive = true;
    } else if (this.wasActive) {
      out.push(zeroCommand(selected));
      this.wasActive = false;
    }
    return out;
  }
}
