"""Online replanning: watch dynamic obstacles, hold and replan when threatened.

At the replan rate the executor predicts dynamic obstacles forward under
constant velocity over a horizon, re-validates the remaining trajectory at
the control resolution, and checks the predicted dynamic-obstacle clearance
against a safety margin.  A threatened team is told to station-keep, then a
fresh plan is grown from the current estimated configuration.  Static
geometry is excluded from the margin test (plans may legitimately hug
walls); it still participates in the hard validity check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..collision import BodyGeometry, CollisionWorld
from ..control import JointTrajectoryMsg, TrajectoryPoint, sample_trajectory
from ..geometry import Box, Sphere, primitive_distance
from ..world import ObstacleSnapshot, WorldBounds
from .planners import PlanRequest, PlanResult, plan
from .space import CompositeSpace
from .timing import path_to_trajectories

CONTINUE = "Continue"
REPLANNED = "Replanned"
HOLD = "Hold"


class ReplanFailed(Exception):
    """Too many consecutive replans failed; robots stay in station-keep."""


@dataclass(eq=False)
class ExecutorConfig:
    replan_rate: float = 2.0  # Hz
    horizon: float = 5.0  # s of constant-velocity obstacle prediction
    d_safe: float = 0.5  # m margin against predicted dynamic obstacles
    max_failures: int = 3
    cruise_speed: float = 0.4  # m/s used to time dispatched trajectories
    yaw_rate: float = 0.5  # rad/s


class ReplanExecutor:
    """Drives one active plan for the whole team and replans online."""

    def __init__(
        self,
        goals: np.ndarray,  # (N, 4)
        robots: list[BodyGeometry],
        bounds: WorldBounds,
        request_template: PlanRequest,
        config: ExecutorConfig | None = None,
        dispatch=None,  # callable(list[JointTrajectoryMsg])
    ):
        self.goals = np.asarray(goals, dtype=float)
        self.robots = robots
        self.bounds = bounds
        self.template = request_template
        self.config = config or ExecutorConfig()
        self.dispatch = dispatch or (lambda trajectories: None)
        self.space = CompositeSpace(bounds, len(robots))
        self.trajectories: list[JointTrajectoryMsg] | None = None
        self.dispatch_time = 0.0
        self.holding = False
        self.failures = 0
        self.replan_count = 0
        self.hold_count = 0
        self.last_result: PlanResult | None = None
        self._next_check = -np.inf
        self._static_world: CollisionWorld | None = None

    # -- plan dispatch ---------------------------------------------------------

    def _request(self, start: np.ndarray, seed_offset: int) -> PlanRequest:
        t = self.template
        return PlanRequest(
            start=start,
            goal=self.goals,
            planner=t.planner,
            time_budget=t.time_budget,
            validity_resolution=t.validity_resolution,
            goal_tolerance=t.goal_tolerance,
            seed=t.seed + seed_offset,
            max_iterations=t.max_iterations,
        )

    def start(self, start_config: np.ndarray, snapshot: ObstacleSnapshot, t: float) -> PlanResult:
        """Initial offline plan; dispatches trajectories on success."""
        result = plan(self._request(np.asarray(start_config, float), 0), snapshot, self.robots, self.bounds)
        self.last_result = result
        if result.solved:
            self._dispatch_path(result.path, t)
        return result

    def _dispatch_path(self, path: list[np.ndarray], t: float) -> None:
        trajectories = path_to_trajectories(path, self.config.cruise_speed, self.config.yaw_rate)
        self.trajectories = trajectories
        self.dispatch_time = t
        self.holding = False
        self.dispatch(trajectories)

    def _dispatch_hold(self, est_config: np.ndarray, t: float) -> None:
        holds = [
            JointTrajectoryMsg(r, [TrajectoryPoint(tuple(float(v) for v in est_config[r]), 0.0)])
            for r in range(len(self.robots))
        ]
        self.trajectories = None
        self.holding = True
        self.hold_count += 1
        self.dispatch(holds)

    # -- per-tick logic ----------------------------------------------------------

    def due(self, t: float) -> bool:
        return t >= self._next_check

    def tick(self, est_config: np.ndarray, snapshot: ObstacleSnapshot, t: float) -> str:
        """Advance the executor; returns Continue, Hold or Replanned."""
        est_config = np.asarray(est_config, dtype=float)
        if t < self._next_check:
            return HOLD if self.holding else CONTINUE
        self._next_check = t + 1.0 / self.config.replan_rate

        if not self.holding:
            if self.trajectories is None:
                return CONTINUE  # nothing dispatched yet
            if not self._threatened(snapshot, t):
                return CONTINUE
            self._dispatch_hold(est_config, t)
            return HOLD

        result = plan(self._request(est_config, 1 + self.replan_count), snapshot, self.robots, self.bounds)
        self.last_result = result
        if result.solved:
            self.replan_count += 1
            self.failures = 0
            self._dispatch_path(result.path, t)
            return REPLANNED
        self.failures += 1
        if self.failures >= self.config.max_failures:
            raise ReplanFailed(f"{self.failures} consecutive replans failed")
        return HOLD

    # -- prediction ----------------------------------------------------------------

    def _remaining_duration(self, t: float) -> float:
        assert self.trajectories is not None
        elapsed = t - self.dispatch_time
        return max(0.0, max(traj.duration for traj in self.trajectories) - elapsed)

    def _config_at(self, rel_t: float) -> np.ndarray:
        q = np.empty((len(self.trajectories), 4))
        for r, traj in enumerate(self.trajectories):
            q[r] = sample_trajectory(traj, rel_t)
        return q

    def _statics(self, snapshot: ObstacleSnapshot) -> CollisionWorld | None:
        if self._static_world is None and len(snapshot.static_centers):
            prims = [
                (f"s{k}", Box(snapshot.static_centers[k], snapshot.static_halves[k]))
                for k in range(len(snapshot.static_centers))
            ]
            self._static_world = CollisionWorld(prims)
        return self._static_world

    def _threatened(self, snapshot: ObstacleSnapshot, t: float) -> bool:
        cfg = self.config
        horizon = min(cfg.horizon, self._remaining_duration(t) + 1.0 / cfg.replan_rate)
        dt_check = self.template.validity_resolution / cfg.cruise_speed
        steps = max(1, int(np.ceil(horizon / dt_check)))
        statics = self._statics(snapshot)
        rel0 = t - self.dispatch_time
        for k in range(steps + 1):
            tau = k * horizon / steps
            q = self._config_at(rel0 + tau)
            if statics is not None and statics.collides(q, self.robots):
                return True
            if len(snapshot.dyn_centers):
                centers = snapshot.dyn_centers + tau * snapshot.dyn_velocities
                if self._dyn_margin(q, centers, snapshot.dyn_radii) < cfg.d_safe:
                    return True
            if self._robot_pair_collision(q):
                return True
        return False

    def _dyn_margin(self, q: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> float:
        best = np.inf
        for r, geom in enumerate(self.robots):
            for prim in geom.placed(q[r, :3], q[r, 3]):
                if isinstance(prim, Sphere):
                    d = np.linalg.norm(centers - prim.center, axis=1) - radii - prim.radius
                    best = min(best, float(np.min(d)))
                else:
                    for c, rr in zip(centers, radii):
                        best = min(best, primitive_distance(prim, Sphere(c, float(rr))))
        return best

    def _robot_pair_collision(self, q: np.ndarray) -> bool:
        placed = [g.placed(q[i, :3], q[i, 3]) for i, g in enumerate(self.robots)]
        for i in range(len(placed)):
            for j in range(i + 1, len(placed)):
                if any(primitive_distance(p, other) <= 0.0 for p in placed[i] for other in placed[j]):
                    return True
        return False
