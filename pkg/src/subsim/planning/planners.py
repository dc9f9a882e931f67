"""Sampling-based planners over the composite space: RRT, RRT-Connect, PRM.

All planners share the same validator, metric and shortcut smoother; given a
seed they are deterministic while they terminate by solving or by hitting an
iteration cap (wall-clock budgets cut off at a machine-dependent iteration).
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from ..collision import BodyGeometry, CollisionWorld
from ..world import ObstacleSnapshot, WorldBounds
from .space import CompositeSpace, MotionValidator

SOLVED = "Solved"
TIMED_OUT = "TimedOut"
START_INVALID = "StartInvalid"
GOAL_INVALID = "GoalInvalid"

GOAL_BIAS = 0.05
STEP_RESOLUTION_FACTOR = 5.0
PRM_NEIGHBORS = 10
SHORTCUT_ATTEMPTS = 100


@dataclass(eq=False)
class PlanRequest:
    start: np.ndarray  # (N, 4)
    goal: np.ndarray  # (N, 4)
    planner: str = "rrt_connect"
    time_budget: float = 5.0
    validity_resolution: float = 0.1
    goal_tolerance: float = 0.25
    seed: int = 0
    max_iterations: int | None = None

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        if self.time_budget <= 0:
            raise ValueError("time_budget must be > 0")
        if self.validity_resolution <= 0:
            raise ValueError("validity_resolution must be > 0")
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r} (have {sorted(PLANNERS)})")


@dataclass(eq=False)
class PlanResult:
    outcome: str
    path: list[np.ndarray] | None = None
    computation_time: float = 0.0
    iterations: int = 0

    @property
    def solved(self) -> bool:
        return self.outcome == SOLVED


class _Budget:
    def __init__(self, seconds: float, max_iterations: int | None):
        self.deadline = time.perf_counter() + seconds
        self.max_iterations = max_iterations
        self.iterations = 0

    def spend(self) -> bool:
        """Account one iteration; False when the budget is exhausted."""
        self.iterations += 1
        if self.max_iterations is not None and self.iterations > self.max_iterations:
            return False
        # wall-clock check is coarse: every 32 iterations
        if self.iterations & 31 == 0 and time.perf_counter() > self.deadline:
            return False
        return True


class _Tree:
    """Append-only tree with vectorized nearest-neighbor lookup."""

    def __init__(self, space: CompositeSpace, root: np.ndarray):
        self.space = space
        n = space.num_robots
        self.configs = np.zeros((64, n, 4))
        self.parents = np.full(64, -1, dtype=np.int64)
        self.size = 0
        self.add(root, -1)

    def add(self, config: np.ndarray, parent: int) -> int:
        if self.size == len(self.configs):
            self.configs = np.concatenate([self.configs, np.zeros_like(self.configs)])
            self.parents = np.concatenate([self.parents, np.full(len(self.parents), -1, dtype=np.int64)])
        self.configs[self.size] = config
        self.parents[self.size] = parent
        self.size += 1
        return self.size - 1

    def nearest(self, q: np.ndarray) -> int:
        d = self.space.distance_many(self.configs[: self.size], q)
        return int(np.argmin(d))

    def path_to_root(self, idx: int) -> list[np.ndarray]:
        out = []
        while idx >= 0:
            out.append(self.configs[idx].copy())
            idx = int(self.parents[idx])
        return out


def _steer(space: CompositeSpace, a: np.ndarray, b: np.ndarray, step: float) -> np.ndarray:
    d = space.distance(a, b)
    if d <= step:
        return b.copy()
    return space.interpolate(a, b, step / d)


def _plan_rrt(space, validator, request, rng, budget) -> list[np.ndarray] | None:
    step = STEP_RESOLUTION_FACTOR * request.validity_resolution
    tree = _Tree(space, request.start)
    goal = request.goal
    while budget.spend():
        target = goal if rng.random() < GOAL_BIAS else space.sample_uniform(rng)
        near_idx = tree.nearest(target)
        q_new = _steer(space, tree.configs[near_idx], target, step)
        if not validator.motion_valid(tree.configs[near_idx], q_new):
            continue
        new_idx = tree.add(q_new, near_idx)
        if space.distance(q_new, goal) <= request.goal_tolerance:
            return tree.path_to_root(new_idx)[::-1]
        if space.distance(q_new, goal) <= step and validator.motion_valid(q_new, goal):
            return tree.path_to_root(tree.add(goal.copy(), new_idx))[::-1]
    return None


_TRAPPED, _ADVANCED, _REACHED = 0, 1, 2


def _extend(tree: _Tree, q: np.ndarray, step: float, validator) -> tuple[int, int]:
    near_idx = tree.nearest(q)
    q_new = _steer(tree.space, tree.configs[near_idx], q, step)
    if not validator.motion_valid(tree.configs[near_idx], q_new):
        return _TRAPPED, -1
    idx = tree.add(q_new, near_idx)
    status = _REACHED if tree.space.distance(q_new, q) < 1e-12 else _ADVANCED
    return status, idx


def _connect(tree: _Tree, q: np.ndarray, step: float, validator, budget) -> tuple[int, int]:
    status, idx = _ADVANCED, -1
    while status == _ADVANCED:
        if not budget.spend():
            return _TRAPPED, idx
        status, idx = _extend(tree, q, step, validator)
    return status, idx


def _plan_rrt_connect(space, validator, request, rng, budget) -> list[np.ndarray] | None:
    step = STEP_RESOLUTION_FACTOR * request.validity_resolution
    tree_a = _Tree(space, request.start)
    tree_b = _Tree(space, request.goal)
    a_is_start = True
    while budget.spend():
        q_rand = space.sample_uniform(rng)
        status, new_idx = _extend(tree_a, q_rand, step, validator)
        if status != _TRAPPED:
            status2, idx_b = _connect(tree_b, tree_a.configs[new_idx], step, validator, budget)
            if status2 == _REACHED:
                seg_a = tree_a.path_to_root(new_idx)[::-1]
                seg_b = tree_b.path_to_root(idx_b)
                path = seg_a + seg_b if a_is_start else seg_b[::-1] + seg_a[::-1]
                return path
        tree_a, tree_b = tree_b, tree_a
        a_is_start = not a_is_start
    return None


class _DisjointSet:
    def __init__(self):
        self.parent: list[int] = []

    def make(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _plan_prm(space, validator, request, rng, budget) -> list[np.ndarray] | None:
    n = space.num_robots
    configs = np.zeros((256, n, 4))
    adjacency: list[list[tuple[int, float]]] = [[], []]
    uf = _DisjointSet()
    configs[0], configs[1] = request.start, request.goal
    size = 2
    uf.make(), uf.make()

    def try_edge(i: int, j: int) -> None:
        nonlocal adjacency
        d = space.distance(configs[i], configs[j])
        if validator.motion_valid(configs[i], configs[j]):
            adjacency[i].append((j, d))
            adjacency[j].append((i, d))
            uf.union(i, j)

    if budget.spend():
        try_edge(0, 1)
    while uf.find(0) != uf.find(1):
        if not budget.spend():
            return None
        q = space.sample_uniform(rng)
        if not validator.state_valid(q):
            continue
        if size == len(configs):
            configs = np.concatenate([configs, np.zeros_like(configs)])
        configs[size] = q
        idx = size
        size += 1
        uf.make()
        adjacency.append([])
        d = space.distance_many(configs[: size - 1], q)
        order = np.argsort(d, kind="stable")[:PRM_NEIGHBORS]
        for j in order:
            try_edge(idx, int(j))

    # Dijkstra from start (0) to goal (1)
    dist = {0: 0.0}
    prev: dict[int, int] = {}
    heap = [(0.0, 0)]
    visited: set[int] = set()
    while heap:
        d0, u = heapq.heappop(heap)
        if u in visited:
            continue
        visited.add(u)
        if u == 1:
            break
        for v, w in adjacency[u]:
            nd = d0 + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if 1 not in visited:
        return None
    chain = [1]
    while chain[-1] != 0:
        chain.append(prev[chain[-1]])
    return [configs[i].copy() for i in reversed(chain)]


PLANNERS = {
    "rrt": _plan_rrt,
    "rrt_connect": _plan_rrt_connect,
    "prm": _plan_prm,
}


def shortcut_smooth(
    path: list[np.ndarray],
    space: CompositeSpace,
    validator: MotionValidator,
    rng: np.random.Generator,
    attempts: int = SHORTCUT_ATTEMPTS,
) -> list[np.ndarray]:
    """Random waypoint shortcuts; accepts only strictly shorter, valid splices."""
    path = [p.copy() for p in path]

    def try_splice(i: int, j: int) -> None:
        nonlocal path
        direct = space.distance(path[i], path[j])
        through = sum(space.distance(path[k], path[k + 1]) for k in range(i, j))
        if direct < through - 1e-12 and validator.motion_valid(path[i], path[j]):
            path = path[: i + 1] + path[j:]

    if len(path) >= 2:
        try_splice(0, len(path) - 1)
    for _ in range(attempts):
        if len(path) < 3:
            break
        i = int(rng.integers(0, len(path) - 2))
        j = int(rng.integers(i + 2, len(path)))
        try_splice(i, j)
    return path


def plan(
    request: PlanRequest,
    snapshot: ObstacleSnapshot,
    robots: list[BodyGeometry],
    bounds: WorldBounds,
) -> PlanResult:
    """Run the selected planner against a frozen snapshot; deterministic per seed."""
    t0 = time.perf_counter()
    space = CompositeSpace(bounds, len(robots))
    world = CollisionWorld.from_snapshot(snapshot)
    # margin = resolution/2 makes discretized validity sound for the true
    # geometry at any finer re-check resolution
    validator = MotionValidator(
        space, world, robots, request.validity_resolution, margin=0.5 * request.validity_resolution
    )

    if not validator.state_valid(request.start):
        return PlanResult(START_INVALID, computation_time=time.perf_counter() - t0)
    if not validator.state_valid(request.goal):
        return PlanResult(GOAL_INVALID, computation_time=time.perf_counter() - t0)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=request.seed, spawn_key=(10,))))
    budget = _Budget(request.time_budget, request.max_iterations)

    if space.distance(request.start, request.goal) <= request.goal_tolerance:
        path = [request.start.copy()]
    else:
        path = PLANNERS[request.planner](space, validator, request, rng, budget)

    if path is None:
        return PlanResult(TIMED_OUT, computation_time=time.perf_counter() - t0, iterations=budget.iterations)
    if len(path) > 1:
        path = shortcut_smooth(path, space, validator, rng)
    return PlanResult(
        SOLVED, path=path, computation_time=time.perf_counter() - t0, iterations=budget.iterations
    )
