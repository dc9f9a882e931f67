"""Composite-space sampling planners and the online replanning executor."""

from .space import CompositeSpace, MotionValidator
from .planners import (
    GOAL_INVALID,
    PLANNERS,
    SOLVED,
    START_INVALID,
    TIMED_OUT,
    PlanRequest,
    PlanResult,
    plan,
    shortcut_smooth,
)
from .timing import path_to_trajectories
from .executor import CONTINUE, HOLD, REPLANNED, ExecutorConfig, ReplanExecutor, ReplanFailed

__all__ = [
    "CompositeSpace",
    "MotionValidator",
    "PlanRequest",
    "PlanResult",
    "plan",
    "shortcut_smooth",
    "path_to_trajectories",
    "PLANNERS",
    "SOLVED",
    "TIMED_OUT",
    "START_INVALID",
    "GOAL_INVALID",
    "ReplanExecutor",
    "ExecutorConfig",
    "ReplanFailed",
    "CONTINUE",
    "HOLD",
    "REPLANNED",
]
