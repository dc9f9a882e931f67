"""Convert composite paths into synchronized per-robot timed trajectories."""

from __future__ import annotations

import numpy as np

from ..control import JointTrajectoryMsg, TrajectoryPoint
from .space import wrap_angles


def path_to_trajectories(
    path: list[np.ndarray], cruise_speed: float, yaw_rate: float
) -> list[JointTrajectoryMsg]:
    """Time a path so all robots arrive at each waypoint together.

    Segment duration is the max over robots of translation time at
    cruise_speed and yaw time at yaw_rate; every robot gets the same
    cumulative schedule.
    """
    if cruise_speed <= 0 or yaw_rate <= 0:
        raise ValueError("cruise_speed and yaw_rate must be > 0")
    if not path:
        raise ValueError("empty path")
    n_robots = path[0].shape[0]

    times = [0.0]
    for a, b in zip(path, path[1:]):
        trans = np.linalg.norm(b[:, :3] - a[:, :3], axis=1) / cruise_speed
        yaw = np.abs(wrap_angles(b[:, 3] - a[:, 3])) / yaw_rate
        times.append(times[-1] + max(float(np.max(np.maximum(trans, yaw))), 1e-6))

    out = []
    for r in range(n_robots):
        points = [
            TrajectoryPoint(
                (float(wp[r, 0]), float(wp[r, 1]), float(wp[r, 2]), float(wp[r, 3])), times[k]
            )
            for k, wp in enumerate(path)
        ]
        out.append(JointTrajectoryMsg(r, points))
    return out
