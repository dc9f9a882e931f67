"""The composite configuration space: all robots' (x, y, z, yaw) stacked.

Distance sums per-robot Euclidean position distance plus yaw-weighted
angular distance, so one metric serves nearest-neighbor queries, steering
and path lengths for the whole team.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import quat
from ..collision import BodyGeometry, CollisionWorld
from ..world import WorldBounds

TWO_PI = 2.0 * math.pi


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized wrap to (-pi, pi]."""
    w = np.remainder(np.asarray(a, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(w == -math.pi, math.pi, w)


@dataclass(eq=False)
class CompositeSpace:
    bounds: WorldBounds
    num_robots: int
    yaw_weight: float = 0.5  # meters per radian

    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        q = np.empty((self.num_robots, 4))
        lo, hi = self.bounds.min, self.bounds.max
        q[:, :3] = rng.uniform(lo, hi, size=(self.num_robots, 3))
        yaw = rng.uniform(-math.pi, math.pi, size=self.num_robots)
        q[:, 3] = np.where(yaw == -math.pi, math.pi, yaw)
        return q

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        dp = np.linalg.norm(b[:, :3] - a[:, :3], axis=1)
        dyaw = np.abs(wrap_angles(b[:, 3] - a[:, 3]))
        return float(np.sum(dp + self.yaw_weight * dyaw))

    def distance_many(self, batch: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Distances from each config in batch (M, N, 4) to q (N, 4)."""
        dp = np.linalg.norm(batch[:, :, :3] - q[:, :3], axis=2)
        dyaw = np.abs(wrap_angles(batch[:, :, 3] - q[:, 3]))
        return np.sum(dp + self.yaw_weight * dyaw, axis=1)

    def interpolate(self, a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
        return interpolate(a, b, s)

    def max_robot_displacement(self, a: np.ndarray, b: np.ndarray) -> float:
        dp = np.linalg.norm(b[:, :3] - a[:, :3], axis=1)
        dyaw = np.abs(wrap_angles(b[:, 3] - a[:, 3]))
        return float(np.max(dp + self.yaw_weight * dyaw))

    def in_bounds(self, q: np.ndarray) -> bool:
        return bool(np.all(q[:, :3] >= self.bounds.min) and np.all(q[:, :3] <= self.bounds.max))

    def path_length(self, path: list[np.ndarray]) -> float:
        return sum(self.distance(a, b) for a, b in zip(path, path[1:]))


def interpolate(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    """Linear in positions, shortest-arc in yaw; s=0 -> a, s=1 -> b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty_like(a)
    out[:, :3] = a[:, :3] + s * (b[:, :3] - a[:, :3])
    out[:, 3] = wrap_angles(a[:, 3] + s * wrap_angles(b[:, 3] - a[:, 3]))
    return out


def inflate_body(geom: BodyGeometry, margin: float) -> BodyGeometry:
    """Grow every primitive by `margin` (planning safety inflation)."""
    from ..geometry import Box, Capsule, Sphere

    prims = []
    for p in geom.primitives:
        if isinstance(p, Sphere):
            prims.append(Sphere(p.center, p.radius + margin))
        elif isinstance(p, Capsule):
            prims.append(Capsule(p.a, p.b, p.radius + margin))
        else:
            prims.append(Box(p.center, p.half_extents + margin))
    return BodyGeometry(geom.robot_index, prims)


class MotionValidator:
    """Discretized state/motion validity against one frozen collision world.

    With margin = resolution/2, a segment whose sampled states all pass is
    guaranteed collision-free for the uninflated geometry at every point in
    between: each point lies within resolution/2 of a checked state that had
    at least that much spare clearance.
    """

    def __init__(
        self,
        space: CompositeSpace,
        world: CollisionWorld,
        robots: list[BodyGeometry],
        resolution: float,
        margin: float = 0.0,
    ):
        if resolution <= 0:
            raise ValueError("resolution must be > 0")
        self.space = space
        self.world = world
        self.robots = [inflate_body(g, margin) for g in robots] if margin > 0 else robots
        self.resolution = resolution
        self.margin = margin
        self.checks = 0
        # vectorized fast path: every robot a single sphere, world all boxes/spheres
        self._sphere_radii = None
        if world.only_boxes_and_spheres and all(
            len(g.primitives) == 1 and hasattr(g.primitives[0], "radius") and hasattr(g.primitives[0], "center")
            and not hasattr(g.primitives[0], "a")
            for g in self.robots
        ):
            if all(np.allclose(g.primitives[0].center, 0.0) for g in self.robots):
                self._sphere_radii = np.array([g.primitives[0].radius for g in self.robots])

    def state_valid(self, q: np.ndarray) -> bool:
        self.checks += 1
        if self._sphere_radii is not None:
            return self._positions_valid(q[None, :, :3])
        return self.space.in_bounds(q) and not self.world.collides(q, self.robots)

    def motion_valid(self, a: np.ndarray, b: np.ndarray) -> bool:
        """Check ceil(maxDisplacement/resolution)+1 evenly spaced states, ends included."""
        n = int(math.ceil(self.space.max_robot_displacement(a, b) / self.resolution)) + 1
        if self._sphere_radii is not None:
            # sphere robots ignore yaw: interpolate positions for all samples at once
            s = np.linspace(0.0, 1.0, n)[:, None, None]
            pos = a[None, :, :3] + s * (b[None, :, :3] - a[None, :, :3])
            self.checks += n
            return self._positions_valid(pos)
        if n == 1:
            return self.state_valid(a)
        for k in range(n):
            if not self.state_valid(self.space.interpolate(a, b, k / (n - 1))):
                return False
        return True

    def _positions_valid(self, pos: np.ndarray) -> bool:
        """Vectorized all-sphere validity for sample positions (M, N, 3)."""
        lo, hi = self.space.bounds.min, self.space.bounds.max
        if np.any(pos < lo) or np.any(pos > hi):
            return False
        radii = self._sphere_radii
        bc, bh = self.world.box_arrays
        if len(bc):
            d = np.abs(pos[:, :, None, :] - bc) - bh  # (M, N, B, 3)
            outside = np.maximum(d, 0.0)
            dist = np.sqrt(np.sum(outside * outside, axis=3))
            inside = np.all(d < 0.0, axis=3)
            if np.any(inside | (dist <= radii[None, :, None])):
                return False
        sc, sr = self.world.sphere_arrays
        if len(sc):
            dist = np.linalg.norm(pos[:, :, None, :] - sc, axis=3) - sr
            if np.any(dist <= radii[None, :, None]):
                return False
        n_robots = pos.shape[1]
        if n_robots > 1:
            iu, ju = np.triu_indices(n_robots, k=1)
            pd = np.linalg.norm(pos[:, iu, :] - pos[:, ju, :], axis=2)
            if np.any(pd <= radii[iu] + radii[ju]):
                return False
        return True


def yaw_of_quat(q: np.ndarray) -> float:
    return quat.yaw_of(q)
