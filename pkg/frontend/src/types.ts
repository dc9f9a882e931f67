// JSON message shapes exchanged with the simulation server.

export interface Vec3 extends Array<number> {}

export interface RobotSummary {
  name: string;
  radius: number;
}

export interface HelloMsg {
  type: "hello";
  bounds: { min: Vec3; max: Vec3 };
  static_obstacles: { center: Vec3; half_extents: Vec3 }[];
  robots: RobotSummary[];
  tick_rate: number;
}

export interface RobotFrame {
  name: string;
  true_position: Vec3;
  true_yaw: number;
  est_position: Vec3;
  est_yaw: number;
  mode: string;
  armed: boolean;
}

export interface StateMsg {
  type: "state";
  t: number;
  robots: RobotFrame[];
  dynamic_obstacles: { id: number; position: Vec3; radius: number }[];
  plan: { status: string; replans: number; holds: number; paths: number[][][] };
  metrics: { collisions: number; missed_actuator_frames: number; proxy_drops: number };
}

export interface PlanResultMsg {
  type: "plan_result";
  outcome: string;
  computation_time?: number;
  waypoints?: number;
  message?: string;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg = HelloMsg | StateMsg | PlanResultMsg | ErrorMsg;

export interface TeleopCmd {
  type: "teleop";
  robot: number;
  axes: number[]; // x, y, z, roll, pitch, yaw in [-1000, 1000]
}

export type ClientCmd =
  | TeleopCmd
  | { type: "arm" | "disarm"; robot: number }
  | { type: "set_mode"; robot: number; mode: string }
  | { type: "plan"; goals: number[][]; planner?: string }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "step"; n?: number };
