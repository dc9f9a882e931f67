"""Replanning executor: threat detection, hold/replan cycle, failure surfacing."""

import numpy as np
import pytest

from subsim.collision import BodyGeometry
from subsim.control import sample_trajectory
from subsim.planning import (
    CONTINUE,
    HOLD,
    REPLANNED,
    ExecutorConfig,
    PlanRequest,
    ReplanExecutor,
    ReplanFailed,
)
from subsim.world import ObstacleSnapshot, WorldBounds

BOUNDS = WorldBounds((-10.0, -10.0, -8.0), (10.0, 10.0, 0.0))
ROBOT = [BodyGeometry.sphere(0, 0.3)]
START = np.array([[-8.0, 0.0, -5.0, 0.0]])
GOAL = np.array([[8.0, 0.0, -5.0, 0.0]])


def snap_dynamic(t, center, radius, velocity) -> ObstacleSnapshot:
    z3 = np.zeros((0, 3))
    return ObstacleSnapshot(
        t,
        z3.copy(),
        z3.copy(),
        np.asarray(center, dtype=float).reshape(1, 3),
        np.array([radius]),
        np.asarray(velocity, dtype=float).reshape(1, 3),
    )


def empty_snap(t=0.0) -> ObstacleSnapshot:
    z3 = np.zeros((0, 3))
    return ObstacleSnapshot(t, z3.copy(), z3.copy(), z3.copy(), np.zeros(0), z3.copy())


def make_executor(dispatched):
    template = PlanRequest(START, GOAL, planner="rrt_connect", time_budget=5.0, seed=1)
    return ReplanExecutor(
        GOAL,
        ROBOT,
        BOUNDS,
        template,
        ExecutorConfig(cruise_speed=0.4, d_safe=0.5, horizon=5.0, replan_rate=2.0),
        dispatch=dispatched.append,
    )


def executed_config(executor, trajectories, t):
    """Robots follow whatever was last dispatched, perfectly."""
    q = np.empty((1, 4))
    traj = trajectories[-1][0]
    q[0] = sample_trajectory(traj, t - executor.dispatch_time)
    return q


class TestStaticWorld:
    def test_continue_every_tick(self):
        dispatched = []
        ex = make_executor(dispatched)
        result = ex.start(START, empty_snap(), 0.0)
        assert result.solved
        outcomes = set()
        for k in range(200):
            t = k * 0.1
            q = executed_config(ex, dispatched, t)
            outcomes.add(ex.tick(q, empty_snap(t), t))
        assert outcomes == {CONTINUE}
        assert ex.replan_count == 0 and ex.hold_count == 0


class CrossingWorld:
    """Obstacle travels in -y, timed to cross the corridor when the robot arrives."""

    def __init__(self, y0=8.0, vy=-0.4, radius=0.5):
        self.center0 = np.array([0.0, y0, -5.0])
        self.vel = np.array([0.0, vy, 0.0])
        self.radius = radius

    def snap(self, t) -> ObstacleSnapshot:
        return snap_dynamic(t, self.center0 + t * self.vel, self.radius, self.vel)


class TestCrossing:
    def run(self, world, seconds=60.0):
        dispatched = []
        ex = make_executor(dispatched)
        assert ex.start(START, world.snap(0.0), 0.0).solved
        outcomes = []
        min_true_clearance = np.inf
        t, dt = 0.0, 0.1
        while t < seconds:
            t += dt
            q = executed_config(ex, dispatched, t)
            outcomes.append(ex.tick(q, world.snap(t), t))
            obstacle = world.center0 + t * world.vel
            d = np.linalg.norm(q[0, :3] - obstacle) - world.radius - 0.3
            min_true_clearance = min(min_true_clearance, d)
        return ex, outcomes, min_true_clearance, dispatched

    def test_crossing_triggers_hold_then_replan(self):
        ex, outcomes, clearance, _ = self.run(CrossingWorld())
        assert HOLD in outcomes and REPLANNED in outcomes
        assert outcomes.index(HOLD) < outcomes.index(REPLANNED)
        assert ex.replan_count >= 1
        assert clearance > 0.0  # never actually touched

    def test_clearance_margin_respected(self):
        ex, outcomes, clearance, _ = self.run(CrossingWorld())
        assert clearance >= 0.9 * ex.config.d_safe

    def test_mirrored_obstacle_never_replans(self):
        # same spawn, moving away from the corridor
        ex, outcomes, _, _ = self.run(CrossingWorld(vy=+0.4), seconds=50.0)
        assert set(outcomes) == {CONTINUE}
        assert ex.replan_count == 0 and ex.hold_count == 0

    def test_goal_reached_after_crossing(self):
        ex, outcomes, _, dispatched = self.run(CrossingWorld(), seconds=80.0)
        final = executed_config(ex, dispatched, 80.0)
        assert np.linalg.norm(final[0, :3] - GOAL[0, :3]) < 0.5


class TestReplanFailed:
    def test_surfaces_after_consecutive_failures(self):
        dispatched = []
        ex = make_executor(dispatched)
        assert ex.start(START, empty_snap(), 0.0).solved
        # force a hold, then keep the goal engulfed so every replan fails
        ex._dispatch_hold(START, 1.0)
        bad = snap_dynamic(1.0, GOAL[0, :3], 3.0, (0, 0, 0))
        t = 1.0
        with pytest.raises(ReplanFailed):
            for _ in range(ex.config.max_failures + 1):
                t += 0.6
                outcome = ex.tick(START, snap_dynamic(t, GOAL[0, :3], 3.0, (0, 0, 0)), t)
                assert outcome == HOLD

    def test_recovers_after_transient_failures(self):
        dispatched = []
        ex = make_executor(dispatched)
        assert ex.start(START, empty_snap(), 0.0).solved
        ex._dispatch_hold(START, 1.0)
        outcome = ex.tick(START, snap_dynamic(1.6, GOAL[0, :3], 3.0, (0, 0, 0)), 1.6)
        assert outcome == HOLD and ex.failures == 1
        outcome = ex.tick(START, empty_snap(2.2), 2.2)
        assert outcome == REPLANNED and ex.failures == 0
