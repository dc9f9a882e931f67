import { describe, expect, it } from "vitest";

import {
  goalsComplete,
  initialState,
  isStale,
  reduce,
  selectedArmed,
} from "../src/state.js";
import type { HelloMsg, StateMsg } from "../src/types.js";

const hello: HelloMsg = {
  type: "hello",
  bounds: { min: [-10, -10, -8], max: [10, 10, 0] },
  static_obstacles: [],
  robots: [
    { name: "alpha", radius: 0.3 },
    { name: "bravo", radius: 0.3 },
  ],
  tick_rate: 50,
};

function stateMsg(overrides: Partial<StateMsg> = {}): StateMsg {
  return {
    type: "state",
    t: 1.0,
    robots: [
      {
        name: "alpha",
        true_position: [0, 0, -4],
        true_yaw: 0,
        est_position: [0, 0, -4],
        est_yaw: 0,
        mode: "MANUAL",
        armed: true,
      },
      {
        name: "bravo",
        true_position: [2, 0, -4],
        true_yaw: 0,
        est_position: [2, 0, -4],
        est_yaw: 0,
        mode: "DISARMED",
        armed: false,
      },
    ],
    dynamic_obstacles: [],
    plan: { status: "none", replans: 0, holds: 0, paths: [] },
    metrics: { collisions: 0, missed_actuator_frames: 0, proxy_drops: 0 },
    ...overrides,
  };
}

describe("reducer", () => {
  it("hello initializes per-robot goal slots", () => {
    const s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    expect(s.scene?.robots).toHaveLength(2);
    expect(s.goals).toEqual([null, null]);
  });

  it("state frames update and timestamp", () => {
    let s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    s = reduce(s, { kind: "message", msg: stateMsg(), nowMs: 500 });
    expect(s.frame?.t).toBe(1.0);
    expect(s.frameAtMs).toBe(500);
  });

  it("stale indicator after one second without frames", () => {
    let s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    s = reduce(s, { kind: "message", msg: stateMsg(), nowMs: 1000 });
    expect(isStale(s, 1900)).toBe(false);
    expect(isStale(s, 2100)).toBe(true);
  });

  it("selection is bounded by the fleet size", () => {
    let s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    s = reduce(s, { kind: "select", robot: 9 });
    expect(s.selected).toBe(0);
    s = reduce(s, { kind: "select", robot: 1 });
    expect(s.selected).toBe(1);
  });

  it("selectedArmed reflects the stream frame", () => {
    let s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    s = reduce(s, { kind: "message", msg: stateMsg(), nowMs: 0 });
    expect(selectedArmed(s)).toBe(true); // alpha armed
    s = reduce(s, { kind: "select", robot: 1 });
    expect(selectedArmed(s)).toBe(false); // bravo disarmed
  });

  it("plan failure raises a banner, success clears it", () => {
    let s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    s = reduce(s, {
      kind: "message",
      msg: { type: "plan_result", outcome: "GoalInvalid" },
      nowMs: 0,
    });
    expect(s.banner).toContain("GoalInvalid");
    s = reduce(s, {
      kind: "message",
      msg: { type: "plan_result", outcome: "Solved", waypoints: 5 },
      nowMs: 0,
    });
    expect(s.banner).toBeNull();
    expect(s.planOutcome).toBe("Solved");
  });

  it("server error payloads surface verbatim", () => {
    const s = reduce(initialState(), {
      kind: "message",
      msg: { type: "error", message: "unknown command 'bogus'" },
      nowMs: 0,
    });
    expect(s.banner).toBe("unknown command 'bogus'");
  });

  it("goals complete only when every robot has one", () => {
    let s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    expect(goalsComplete(s)).toBe(false);
    s = reduce(s, { kind: "set_goal", robot: 0, goal: [1, 2, -4, 0] });
    expect(goalsComplete(s)).toBe(false);
    s = reduce(s, { kind: "set_goal", robot: 1, goal: [3, 2, -4, 0] });
    expect(goalsComplete(s)).toBe(true);
  });

  it("reconnect keeps scene so the cockpit repaints from the next frame", () => {
    let s = reduce(initialState(), { kind: "message", msg: hello, nowMs: 0 });
    s = reduce(s, { kind: "message", msg: stateMsg(), nowMs: 0 });
    s = reduce(s, { kind: "close" });
    expect(s.connection).toBe("closed");
    s = reduce(s, { kind: "open" });
    s = reduce(s, { kind: "message", msg: stateMsg({ t: 9 }), nowMs: 5000 });
    expect(s.frame?.t).toBe(9);
  });
});
