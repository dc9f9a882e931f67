"""World model: bounds, current field, and the procedural obstacle field.

Static obstacles are floor-anchored box pillars grown by a cellular automaton
on a 2D grid (one pillar per surviving solid cell, heights shared per
connected component).  Dynamic obstacles are spheres advected by the current
field plus an individual vertical buoyancy bias; they are pure kinematic
hazards and never push back on anything.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .geometry import Box, Sphere

GRID_SOLID = "#"
GRID_OPEN = "."


class PlacementFailure(Exception):
    """A dynamic obstacle could not be placed collision-free (spec too dense)."""


@dataclass(eq=False)
class WorldBounds:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        self.min = np.asarray(self.min, dtype=float)
        self.max = np.asarray(self.max, dtype=float)
        if not np.all(self.min < self.max):
            raise ValueError("bounds min must be < max componentwise")
        if not (self.min[2] <= 0.0 <= self.max[2]):
            raise ValueError("z range must include the water surface z=0")

    def span(self) -> np.ndarray:
        return self.max - self.min

    def contains(self, p: np.ndarray, margin: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.min + margin) and np.all(p <= self.max - margin))


@dataclass(eq=False)
class CurrentField:
    """Uniform current: base + gust_amplitude * sin(2*pi*t/period + phase)."""

    base: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gust_amplitude: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gust_period: float = 60.0
    gust_phase: float = 0.0

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.gust_amplitude = np.asarray(self.gust_amplitude, dtype=float)
        if self.gust_period <= 0:
            raise ValueError("gust_period must be > 0")

    def sample(self, position: np.ndarray, t: float) -> np.ndarray:
        # position reserved for spatially varying fields
        return self.base + self.gust_amplitude * math.sin(2.0 * math.pi * t / self.gust_period + self.gust_phase)


def sample_current(field_: CurrentField, position: np.ndarray, t: float) -> np.ndarray:
    return field_.sample(position, t)


@dataclass(eq=False)
class EnvironmentSpec:
    seed: int
    grid_dims: tuple[int, int] = (32, 32)
    cell_size: float = 1.0
    fill_prob: float = 0.45
    ca_iterations: int = 4
    pillar_height_range: tuple[float, float] = (1.0, 4.0)
    dynamic_count: int = 0
    dynamic_radius_range: tuple[float, float] = (0.3, 0.6)
    dynamic_buoyancy_bias_range: tuple[float, float] = (-0.1, 0.1)
    bounds: WorldBounds = field(default_factory=lambda: WorldBounds((-16.0, -16.0, -10.0), (16.0, 16.0, 0.0)))

    def __post_init__(self):
        if not (0.0 <= self.fill_prob <= 1.0):
            raise ValueError("fill_prob must be in [0, 1]")
        if self.pillar_height_range[0] > self.pillar_height_range[1]:
            raise ValueError("pillar height range inverted")
        if self.dynamic_count < 0:
            raise ValueError("dynamic_count must be >= 0")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        nx, ny = self.grid_dims
        span = self.bounds.span()
        if nx * self.cell_size > span[0] + 1e-9 or ny * self.cell_size > span[1] + 1e-9:
            raise ValueError("grid footprint does not fit in bounds")


@dataclass(eq=False)
class Obstacle:
    id: str
    shape: Box | Sphere
    kind: str  # "static" | "dynamic"
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    buoyancy_bias: float = 0.0

    def __post_init__(self):
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.kind == "static" and np.any(self.velocity != 0.0):
            raise ValueError("static obstacles must have zero velocity")


@dataclass(eq=False)
class ObstacleSnapshot:
    """Immutable copy of all obstacle geometry at one instant."""

    timestamp: float
    static_centers: np.ndarray  # (S, 3)
    static_halves: np.ndarray  # (S, 3)
    dyn_centers: np.ndarray  # (M, 3)
    dyn_radii: np.ndarray  # (M,)
    dyn_velocities: np.ndarray  # (M, 3)

    def __post_init__(self):
        for a in (self.static_centers, self.static_halves, self.dyn_centers, self.dyn_radii, self.dyn_velocities):
            a.setflags(write=False)

    def primitives(self):
        """Yield (id, primitive, kind, velocity) for every obstacle."""
        zero = np.zeros(3)
        for k in range(len(self.static_centers)):
            yield f"s{k}", Box(self.static_centers[k], self.static_halves[k]), "static", zero
        for k in range(len(self.dyn_centers)):
            yield f"d{k}", Sphere(self.dyn_centers[k], float(self.dyn_radii[k])), "dynamic", self.dyn_velocities[k]

    @property
    def obstacle_count(self) -> int:
        return len(self.static_centers) + len(self.dyn_centers)


@dataclass(eq=False)
class Environment:
    spec: EnvironmentSpec
    grid: np.ndarray  # (nx, ny) bool, True = solid
    origin: np.ndarray  # world xy of grid corner (cell 0,0 lower corner)
    pillar_heights: np.ndarray  # (nx, ny) float, 0 where open
    static_centers: np.ndarray
    static_halves: np.ndarray
    dyn_centers: np.ndarray
    dyn_radii: np.ndarray
    dyn_biases: np.ndarray
    dyn_velocities: np.ndarray
    _last_snapshot_t: float = -math.inf

    # -- queries ------------------------------------------------------------

    def obstacle_density(self) -> float:
        return float(np.count_nonzero(self.grid)) / self.grid.size

    def static_obstacles(self) -> list[Obstacle]:
        return [
            Obstacle(f"s{k}", Box(self.static_centers[k], self.static_halves[k]), "static")
            for k in range(len(self.static_centers))
        ]

    def dynamic_obstacles(self) -> list[Obstacle]:
        return [
            Obstacle(
                f"d{k}",
                Sphere(self.dyn_centers[k], float(self.dyn_radii[k])),
                "dynamic",
                velocity=self.dyn_velocities[k],
                buoyancy_bias=float(self.dyn_biases[k]),
            )
            for k in range(len(self.dyn_centers))
        ]

    def grid_dump(self) -> str:
        """One character per cell, one row per y index (golden-test format)."""
        nx, ny = self.grid.shape
        rows = []
        for j in range(ny):
            rows.append("".join(GRID_SOLID if self.grid[i, j] else GRID_OPEN for i in range(nx)))
        return "\n".join(rows)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.grid_dump().encode())
        h.update(self.static_centers.tobytes())
        h.update(self.static_halves.tobytes())
        h.update(self.dyn_centers.tobytes())
        h.update(self.dyn_radii.tobytes())
        h.update(self.dyn_biases.tobytes())
        return h.hexdigest()

    def add_dynamic_obstacle(self, center, radius: float, bias: float = 0.0) -> None:
        """Append an explicitly placed dynamic sphere (scenario-scripted hazards)."""
        self.dyn_centers = np.vstack([self.dyn_centers, np.asarray(center, dtype=float)[None, :]])
        self.dyn_radii = np.append(self.dyn_radii, float(radius))
        self.dyn_biases = np.append(self.dyn_biases, float(bias))
        self.dyn_velocities = np.vstack([self.dyn_velocities, np.zeros((1, 3))])

    # -- stepping -----------------------------------------------------------

    def step_obstacles(self, dt: float, current: CurrentField, t: float) -> "Environment":
        """Advance dynamic obstacles by explicit Euler; reflect at bounds.

        Crossing a bound reflects the position about it; a z-bound crossing
        also flips the buoyancy bias sign so risers become sinkers.
        """
        if dt <= 0:
            raise ValueError("dt must be > 0")
        if len(self.dyn_centers) == 0:
            return self
        flow = current.sample(None, t)
        vel = np.broadcast_to(flow, self.dyn_centers.shape).copy()
        vel[:, 2] += self.dyn_biases
        pos = self.dyn_centers + dt * vel

        lo = self.spec.bounds.min
        hi = self.spec.bounds.max
        span = hi - lo
        off = pos - lo
        # fold into [0, 2*span) then mirror; parity of the fold count tells us
        # whether the axis direction flipped
        period = 2.0 * span
        wrapped = np.mod(off, period)
        folded = np.where(wrapped > span, period - wrapped, wrapped)
        flips = np.floor_divide(off, span).astype(int)
        # landing exactly on a bound is a touch, not a crossing
        exact = np.mod(off, span) == 0.0
        flips = flips - (exact * np.sign(off)).astype(int)
        self.dyn_centers = lo + folded
        z_flip = (flips[:, 2] % 2) == 1
        self.dyn_biases = np.where(z_flip, -self.dyn_biases, self.dyn_biases)
        vel[:, 2] = flow[2] + self.dyn_biases
        self.dyn_velocities = vel
        return self

    def snapshot(self, t: float) -> ObstacleSnapshot:
        if t < self._last_snapshot_t:
            raise ValueError("snapshot timestamps must be non-decreasing")
        self._last_snapshot_t = t
        return ObstacleSnapshot(
            timestamp=t,
            static_centers=self.static_centers.copy(),
            static_halves=self.static_halves.copy(),
            dyn_centers=self.dyn_centers.copy(),
            dyn_radii=self.dyn_radii.copy(),
            dyn_velocities=self.dyn_velocities.copy(),
        )


# --------------------------------------------------------------------------
# Generation


def _ca_step(grid: np.ndarray, oob: np.ndarray) -> np.ndarray:
    """One smoothing pass of the cave rule (Moore 8-neighborhood).

    A cell is born solid when >= 5 of its real in-grid neighbors are solid;
    a solid cell survives when its neighbor count, with out-of-grid cells
    counted as solid, is >= 4.  Growing only from real neighbors keeps an
    all-empty seed empty while the solid border still anchors edge cells.
    """
    padded = np.zeros((grid.shape[0] + 2, grid.shape[1] + 2), dtype=np.int32)
    padded[1:-1, 1:-1] = grid
    n = (
        padded[:-2, :-2] + padded[:-2, 1:-1] + padded[:-2, 2:]
        + padded[1:-1, :-2] + padded[1:-1, 2:]
        + padded[2:, :-2] + padded[2:, 1:-1] + padded[2:, 2:]
    )
    return (n >= 5) | (grid & ((n + oob) >= 4))


def _oob_counts(nx: int, ny: int) -> np.ndarray:
    """Number of Moore-neighborhood positions falling outside the grid."""
    ix = np.arange(nx)
    iy = np.arange(ny)
    in_x = np.minimum(ix + 1, nx - 1) - np.maximum(ix - 1, 0) + 1
    in_y = np.minimum(iy + 1, ny - 1) - np.maximum(iy - 1, 0) + 1
    return 9 - np.outer(in_x, in_y)


def _connected_components(grid: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 8-connected solid components in deterministic scan order."""
    nx, ny = grid.shape
    labels = np.full((nx, ny), -1, dtype=np.int32)
    count = 0
    for i in range(nx):
        for j in range(ny):
            if not grid[i, j] or labels[i, j] >= 0:
                continue
            stack = [(i, j)]
            labels[i, j] = count
            while stack:
                ci, cj = stack.pop()
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        ni, nj = ci + di, cj + dj
                        if 0 <= ni < nx and 0 <= nj < ny and grid[ni, nj] and labels[ni, nj] < 0:
                            labels[ni, nj] = count
                            stack.append((ni, nj))
            count += 1
    return labels, count


def generate_environment(spec: EnvironmentSpec) -> Environment:
    """Deterministically generate the obstacle field for a spec."""
    nx, ny = spec.grid_dims
    ca_rng = rngmod.stream(spec.seed, rngmod.STREAM_CA)
    grid = ca_rng.random((nx, ny)) < spec.fill_prob
    oob = _oob_counts(nx, ny)
    for _ in range(spec.ca_iterations):
        grid = _ca_step(grid, oob)

    bounds = spec.bounds
    footprint = np.array([nx * spec.cell_size, ny * spec.cell_size])
    origin = bounds.min[:2] + 0.5 * (bounds.span()[:2] - footprint)

    labels, n_comp = _connected_components(grid)
    h_rng = rngmod.stream(spec.seed, rngmod.STREAM_HEIGHTS)
    h_min, h_max = spec.pillar_height_range
    comp_heights = h_rng.uniform(h_min, h_max, size=max(n_comp, 1))

    floor_z = bounds.min[2]
    max_height = bounds.span()[2]
    centers = []
    halves = []
    half_cell = 0.5 * spec.cell_size
    for i in range(nx):
        for j in range(ny):
            if not grid[i, j]:
                continue
            h = min(float(comp_heights[labels[i, j]]), max_height)
            cx = origin[0] + (i + 0.5) * spec.cell_size
            cy = origin[1] + (j + 0.5) * spec.cell_size
            centers.append((cx, cy, floor_z + 0.5 * h))
            halves.append((half_cell, half_cell, 0.5 * h))
    static_centers = np.array(centers, dtype=float).reshape(-1, 3)
    static_halves = np.array(halves, dtype=float).reshape(-1, 3)

    d_rng = rngmod.stream(spec.seed, rngmod.STREAM_DYNAMIC)
    r_min, r_max = spec.dynamic_radius_range
    b_min, b_max = spec.dynamic_buoyancy_bias_range
    dyn_centers = []
    dyn_radii = []
    dyn_biases = []
    for k in range(spec.dynamic_count):
        radius = float(d_rng.uniform(r_min, r_max))
        bias = float(d_rng.uniform(b_min, b_max))
        placed = False
        for _ in range(1000):
            p = d_rng.uniform(bounds.min + radius, bounds.max - radius)
            sphere = Sphere(p, radius)
            if _sphere_hits_boxes(sphere, static_centers, static_halves):
                continue
            if any(np.linalg.norm(p - c) <= radius + r for c, r in zip(dyn_centers, dyn_radii)):
                continue
            dyn_centers.append(p)
            dyn_radii.append(radius)
            dyn_biases.append(bias)
            placed = True
            break
        if not placed:
            raise PlacementFailure(f"could not place dynamic obstacle {k} in 1000 attempts")

    return Environment(
        spec=spec,
        grid=grid,
        origin=origin,
        pillar_heights=np.where(grid, comp_heights[labels] if n_comp else 0.0, 0.0),
        static_centers=static_centers,
        static_halves=static_halves,
        dyn_centers=np.array(dyn_centers, dtype=float).reshape(-1, 3),
        dyn_radii=np.array(dyn_radii, dtype=float),
        dyn_biases=np.array(dyn_biases, dtype=float),
        dyn_velocities=np.zeros((len(dyn_centers), 3)),
    )


def _sphere_hits_boxes(sphere: Sphere, centers: np.ndarray, halves: np.ndarray) -> bool:
    if len(centers) == 0:
        return False
    d = np.abs(sphere.center - centers) - halves
    outside = np.maximum(d, 0.0)
    dist = np.sqrt(np.sum(outside * outside, axis=1))
    inside = np.all(d < 0.0, axis=1)
    return bool(np.any(inside | (dist <= sphere.radius)))


def obstacle_density(env: Environment) -> float:
    return env.obstacle_density()


def step_obstacles(env: Environment, dt: float, current: CurrentField, t: float) -> Environment:
    return env.step_obstacles(dt, current, t)


def snapshot(env: Environment, t: float) -> ObstacleSnapshot:
    return env.snapshot(t)
