"""Collision and clearance queries over robots and obstacles.

Broadphase is a uniform hash grid over obstacle AABBs (cell edge = largest
primitive bounding diameter); narrowphase runs the analytic primitive
distances on the surviving candidates only.  Robot-robot pairs are always
checked directly (fleet sizes are small).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, Primitive, Sphere, aabb, bounding_diameter, primitive_distance, transform
from .world import ObstacleSnapshot

CLEAR = math.inf


class StateInCollision(Exception):
    pass


@dataclass(eq=False)
class BodyGeometry:
    """Robot collision body: primitives in the body frame."""

    robot_index: int
    primitives: list[Primitive] = field(default_factory=list)

    def __post_init__(self):
        if not self.primitives:
            raise ValueError("body geometry needs at least one primitive")

    @classmethod
    def sphere(cls, robot_index: int, radius: float) -> "BodyGeometry":
        return cls(robot_index, [Sphere(np.zeros(3), radius)])

    def placed(self, position: np.ndarray, yaw: float) -> list[Primitive]:
        return [transform(p, position, yaw) for p in self.primitives]


@dataclass(frozen=True)
class CollisionPair:
    a: str
    b: str
    kind: str  # "robot-robot" | "robot-obstacle"


@dataclass(eq=False)
class CollisionReport:
    colliding: bool
    pairs: list[CollisionPair]
    min_distance: float

    def __post_init__(self):
        assert self.colliding == bool(self.pairs)


class CollisionWorld:
    """Immutable obstacle set with a uniform-grid broadphase.

    Build once per snapshot, query many times; queries are pure.
    """

    def __init__(self, obstacles: list[tuple[str, Primitive]]):
        self._ids = [oid for oid, _ in obstacles]
        self._prims = [p for _, p in obstacles]
        self._cell = max((bounding_diameter(p) for p in self._prims), default=1.0)
        self._grid: dict[tuple[int, int, int], list[int]] = {}
        for idx, prim in enumerate(self._prims):
            for key in self._cells_of(*aabb(prim)):
                self._grid.setdefault(key, []).append(idx)
        # vectorized views for clearance sweeps
        boxes = [(i, p) for i, p in enumerate(self._prims) if isinstance(p, Box)]
        spheres = [(i, p) for i, p in enumerate(self._prims) if isinstance(p, Sphere)]
        self._box_idx = [i for i, _ in boxes]
        self._box_centers = np.array([p.center for _, p in boxes]).reshape(-1, 3)
        self._box_halves = np.array([p.half_extents for _, p in boxes]).reshape(-1, 3)
        self._sphere_idx = [i for i, _ in spheres]
        self._sphere_centers = np.array([p.center for _, p in spheres]).reshape(-1, 3)
        self._sphere_radii = np.array([p.radius for _, p in spheres], dtype=float)
        self._other_idx = [
            i for i, p in enumerate(self._prims) if not isinstance(p, (Box, Sphere))
        ]

    @classmethod
    def from_snapshot(cls, snap: ObstacleSnapshot) -> "CollisionWorld":
        return cls([(oid, prim) for oid, prim, _, _ in snap.primitives()])

    @property
    def obstacle_count(self) -> int:
        return len(self._prims)

    @property
    def only_boxes_and_spheres(self) -> bool:
        return not self._other_idx

    @property
    def box_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self._box_centers, self._box_halves

    @property
    def sphere_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self._sphere_centers, self._sphere_radii

    def _cells_of(self, lo: np.ndarray, hi: np.ndarray):
        c = self._cell
        i0, j0, k0 = (int(math.floor(v / c)) for v in lo)
        i1, j1, k1 = (int(math.floor(v / c)) for v in hi)
        return itertools.product(range(i0, i1 + 1), range(j0, j1 + 1), range(k0, k1 + 1))

    def candidates(self, prim: Primitive) -> list[int]:
        """Obstacle indices whose grid cells overlap the query AABB (superset of hits)."""
        seen: dict[int, None] = {}
        for key in self._cells_of(*aabb(prim)):
            for idx in self._grid.get(key, ()):
                seen[idx] = None
        return list(seen.keys())

    def obstacle_id(self, idx: int) -> str:
        return self._ids[idx]

    def obstacle_primitive(self, idx: int) -> Primitive:
        return self._prims[idx]

    # -- queries -------------------------------------------------------------

    def query(self, config: np.ndarray, robots: list[BodyGeometry]) -> CollisionReport:
        """All colliding pairs for the composite configuration.

        config is (N, 4): per robot x, y, z, yaw.
        """
        placed = [g.placed(config[i, :3], config[i, 3]) for i, g in enumerate(robots)]
        pairs: list[CollisionPair] = []
        for i, prims in enumerate(placed):
            hit_ids: dict[str, None] = {}
            for prim in prims:
                for idx in self.candidates(prim):
                    oid = self._ids[idx]
                    if oid in hit_ids:
                        continue
                    if primitive_distance(prim, self._prims[idx]) <= 0.0:
                        hit_ids[oid] = None
            for oid in hit_ids:
                pairs.append(CollisionPair(f"robot_{robots[i].robot_index}", oid, "robot-obstacle"))
        for i in range(len(robots)):
            for j in range(i + 1, len(robots)):
                if any(
                    primitive_distance(p, q) <= 0.0 for p in placed[i] for q in placed[j]
                ):
                    pairs.append(
                        CollisionPair(
                            f"robot_{robots[i].robot_index}", f"robot_{robots[j].robot_index}", "robot-robot"
                        )
                    )
        if pairs:
            return CollisionReport(True, pairs, 0.0)
        return CollisionReport(False, [], self.clearance(config, robots))

    def collides(self, config: np.ndarray, robots: list[BodyGeometry]) -> bool:
        """Short-circuit boolean hit test (planner hot path; no clearance)."""
        placed = [g.placed(config[i, :3], config[i, 3]) for i, g in enumerate(robots)]
        for prims in placed:
            for prim in prims:
                for idx in self.candidates(prim):
                    if primitive_distance(prim, self._prims[idx]) <= 0.0:
                        return True
        for i in range(len(robots)):
            for j in range(i + 1, len(robots)):
                if any(primitive_distance(p, q) <= 0.0 for p in placed[i] for q in placed[j]):
                    return True
        return False

    def clearance(self, config: np.ndarray, robots: list[BodyGeometry]) -> float:
        """Exact minimum distance over all robot-obstacle and robot-robot pairs."""
        best = CLEAR
        placed = [g.placed(config[i, :3], config[i, 3]) for i, g in enumerate(robots)]
        for prims in placed:
            for prim in prims:
                best = min(best, self.min_distance_to(prim))
        for i in range(len(robots)):
            for j in range(i + 1, len(robots)):
                for p in placed[i]:
                    for q in placed[j]:
                        best = min(best, primitive_distance(p, q))
        return best

    def min_distance_to(self, prim: Primitive) -> float:
        best = CLEAR
        if isinstance(prim, Sphere):
            if len(self._box_centers):
                d = np.abs(prim.center - self._box_centers) - self._box_halves
                outside = np.maximum(d, 0.0)
                dist = np.sqrt(np.sum(outside * outside, axis=1))
                inside = np.all(d < 0.0, axis=1)
                dist = np.where(inside, 0.0, dist) - prim.radius
                best = min(best, float(np.min(dist)))
            if len(self._sphere_centers):
                dist = (
                    np.linalg.norm(prim.center - self._sphere_centers, axis=1)
                    - self._sphere_radii
                    - prim.radius
                )
                best = min(best, float(np.min(dist)))
            for idx in self._other_idx:
                best = min(best, primitive_distance(prim, self._prims[idx]))
        else:
            for other in self._prims:
                best = min(best, primitive_distance(prim, other))
        return best

    def check_spheres(self, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
        """Vectorized boolean hit test for decoupled sphere queries."""
        hits = np.zeros(len(centers), dtype=bool)
        for k in range(len(centers)):
            hits[k] = self.min_distance_to(Sphere(centers[k], float(radii[k]))) <= 0.0
        return hits


def check_state(config: np.ndarray, robots: list[BodyGeometry], snap: ObstacleSnapshot) -> CollisionReport:
    config = np.asarray(config, dtype=float).reshape(len(robots), 4)
    return CollisionWorld.from_snapshot(snap).query(config, robots)


def min_clearance(config: np.ndarray, robots: list[BodyGeometry], snap: ObstacleSnapshot) -> float:
    config = np.asarray(config, dtype=float).reshape(len(robots), 4)
    world = CollisionWorld.from_snapshot(snap)
    report = world.query(config, robots)
    if report.colliding:
        raise StateInCollision(f"{len(report.pairs)} colliding pairs")
    return report.min_distance


def brute_force_pairs(
    config: np.ndarray, robots: list[BodyGeometry], snap: ObstacleSnapshot
) -> set[tuple[str, str]]:
    """All-pairs reference without any broadphase (test oracle)."""
    config = np.asarray(config, dtype=float).reshape(len(robots), 4)
    placed = [g.placed(config[i, :3], config[i, 3]) for i, g in enumerate(robots)]
    obstacles = list(snap.primitives())
    out: set[tuple[str, str]] = set()
    for i, prims in enumerate(placed):
        name = f"robot_{robots[i].robot_index}"
        for oid, oprim, _, _ in obstacles:
            if any(primitive_distance(p, oprim) <= 0.0 for p in prims):
                out.add((name, oid))
        for j in range(i + 1, len(robots)):
            if any(primitive_distance(p, q) <= 0.0 for p in prims for q in placed[j]):
                out.add((name, f"robot_{robots[j].robot_index}"))
    return out
