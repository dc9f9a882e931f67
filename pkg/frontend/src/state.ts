// Cockpit state: a pure reducer over server messages and UI events, so the
// whole thing is unit-testable without a browser or a socket.

import type { HelloMsg, PlanResultMsg, ServerMsg, StateMsg } from "./types.js";

export const STALE_AFTER_MS = 1000;

export interface CockpitState {
  connection: "connecting" | "open" | "closed";
  scene: HelloMsg | null;
  frame: StateMsg | null;
  frameAtMs: number; // wall-clock receipt time of the latest frame
  selected: number;
  banner: string | null;
  planOutcome: string | null;
  goals: (number[] | null)[]; // per-robot pending goal (x, y, z, yaw)
}

export function initialState(): CockpitState {
  return {
    connection: "connecting",
    scene: null,
    frame: null,
    frameAtMs: 0,
    selected: 0,
    banner: null,
    planOutcome: null,
    goals: [],
  };
}

export type CockpitEvent =
  | { kind: "open" }
  | { kind: "close" }
  | { kind: "message"; msg: ServerMsg; nowMs: number }
  | { kind: "select"; robot: number }
  | { kind: "set_goal"; robot: number; goal: number[] }
  | { kind: "clear_banner" };

export function reduce(state: CockpitState, ev: CockpitEvent): CockpitState {
  switch (ev.kind) {
    case "open":
      return { ...state, connection: "open", banner: null };
    case "close":
      return { ...state, connection: "closed" };
    case "select": {
      if (!state.scene || ev.robot < 0 || ev.robot >= state.scene.robots.length) return state;
      return { ...state, selected: ev.robot };
    }
    case "set_goal": {
      const goals = state.goals.slice();
      goals[ev.robot] = ev.goal;
      return { ...state, goals };
    }
    case "clear_banner":
      return { ...state, banner: null };
    case "message":
      return applyMessage(state, ev.msg, ev.nowMs);
  }
}

function applyMessage(state: CockpitState, msg: ServerMsg, nowMs: number): CockpitState {
  switch (msg.type) {
    case "hello":
      return {
        ...state,
        scene: msg,
        goals: msg.robots.map(() => null),
        selected: Math.min(state.selected, Math.max(0, msg.robots.length - 1)),
      };
    case "state":
      return { ...state, frame: msg, frameAtMs: nowMs };
    case "plan_result": {
      const failed = msg.outcome !== "Solved";
      return {
        ...state,
        planOutcome: msg.outcome,
        banner: failed ? `plan failed: ${msg.message ?? msg.outcome}` : null,
      };
    }
    case "error":
      return { ...state, banner: msg.message };
  }
}

export function isStale(state: CockpitState, nowMs: number): boolean {
  return state.frame !== null && nowMs - state.frameAtMs > STALE_AFTER_MS;
}

export function selectedRobot(state: CockpitState) {
  return state.frame?.robots[state.selected] ?? null;
}

export function selectedArmed(state: CockpitState): boolean {
  return selectedRobot(state)?.armed ?? false;
}

export function goalsComplete(state: CockpitState): boolean {
  return state.goals.length > 0 && state.goals.every((g) => g !== null);
}
