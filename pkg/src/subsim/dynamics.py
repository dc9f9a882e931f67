"""6-DOF rigid-body dynamics for free-floating underwater vehicles.

Model: diagonal added mass, diagonal linear + quadratic drag on the velocity
relative to the ambient current, gravity/buoyancy restoring with an offset
center of buoyancy, and a thruster geometry matrix mapping K thruster forces
to a body wrench.  Integration is semi-implicit Euler at a fixed small step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import quat
from .world import CurrentField

GRAVITY = 9.80665


class NonFiniteState(Exception):
    """Integration produced NaN/inf (bad parameters or too large dt)."""


@dataclass(eq=False)
class VehicleParams:
    mass: float
    added_mass: np.ndarray  # 6-vector, diagonal
    linear_drag: np.ndarray  # 6-vector
    quadratic_drag: np.ndarray  # 6-vector
    buoyancy_force: float
    center_of_buoyancy: np.ndarray  # body frame, m
    inertia_diag: np.ndarray  # 3-vector
    thruster_matrix: np.ndarray  # (6, K)
    max_thrust: float

    def __post_init__(self):
        self.added_mass = np.asarray(self.added_mass, dtype=float)
        self.linear_drag = np.asarray(self.linear_drag, dtype=float)
        self.quadratic_drag = np.asarray(self.quadratic_drag, dtype=float)
        self.center_of_buoyancy = np.asarray(self.center_of_buoyancy, dtype=float)
        self.inertia_diag = np.asarray(self.inertia_diag, dtype=float)
        self.thruster_matrix = np.asarray(self.thruster_matrix, dtype=float)
        if self.mass <= 0:
            raise ValueError("mass must be > 0")
        if np.any(self.inertia_diag <= 0):
            raise ValueError("inertia must be > 0")
        if np.any(self.added_mass < 0) or np.any(self.linear_drag < 0) or np.any(self.quadratic_drag < 0):
            raise ValueError("added mass and drag must be >= 0")
        if self.thruster_matrix.shape[0] != 6:
            raise ValueError("thruster matrix must be 6 x K")
        if self.thruster_matrix.shape[1] < 6:
            warnings.warn("fewer than 6 thrusters: vehicle is underactuated", stacklevel=2)
        # cached derived quantities
        self._mass_diag = np.concatenate([np.full(3, self.mass), self.inertia_diag]) + self.added_mass
        self._thruster_pinv = np.linalg.pinv(self.thruster_matrix)

    @property
    def thruster_count(self) -> int:
        return self.thruster_matrix.shape[1]


@dataclass(eq=False)
class VehicleState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world
    orientation: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())  # body->world
    lin_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body
    ang_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.orientation = np.asarray(self.orientation, dtype=float)
        self.lin_vel = np.asarray(self.lin_vel, dtype=float)
        self.ang_vel = np.asarray(self.ang_vel, dtype=float)

    def copy(self) -> "VehicleState":
        return VehicleState(
            self.position.copy(), self.orientation.copy(), self.lin_vel.copy(), self.ang_vel.copy()
        )

    def world_velocity(self) -> np.ndarray:
        return quat.rotate(self.orientation, self.lin_vel)

    def kinetic_energy(self, params: VehicleParams) -> float:
        v6 = np.concatenate([self.lin_vel, self.ang_vel])
        return 0.5 * float(params._mass_diag @ (v6 * v6))


@dataclass(eq=False)
class Wrench:
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.force = np.asarray(self.force, dtype=float)
        self.torque = np.asarray(self.torque, dtype=float)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "Wrench":
        v = np.asarray(v, dtype=float)
        return cls(v[:3], v[3:])


class Allocation(NamedTuple):
    forces: np.ndarray
    saturated: bool


def restoring_wrench(orientation: np.ndarray, params: VehicleParams) -> Wrench:
    """Gravity at the CoM plus buoyancy at the CoB, expressed in body frame."""
    rt = quat.to_matrix(orientation).T
    f_gravity = rt @ np.array([0.0, 0.0, -params.mass * GRAVITY])
    f_buoy = rt @ np.array([0.0, 0.0, params.buoyancy_force])
    torque = np.cross(params.center_of_buoyancy, f_buoy)
    return Wrench(f_gravity + f_buoy, torque)


def allocate_thrust(wrench: Wrench, params: VehicleParams) -> Allocation:
    """Minimum-norm thruster forces for a body wrench, clamped per thruster."""
    raw = params._thruster_pinv @ wrench.as_vector()
    clamped = np.clip(raw, -params.max_thrust, params.max_thrust)
    return Allocation(clamped, bool(np.any(raw != clamped)))


def dynamics_step(
    state: VehicleState,
    params: VehicleParams,
    thruster_cmds: np.ndarray,
    current: CurrentField,
    t: float,
    dt: float,
) -> VehicleState:
    """One semi-implicit Euler step; velocities first, then pose."""
    if not (0.0 < dt <= 0.1):
        raise ValueError("dt must be in (0, 0.1]")
    cmds = np.clip(np.asarray(thruster_cmds, dtype=float), -params.max_thrust, params.max_thrust)

    rot = quat.to_matrix(state.orientation)
    flow = current.sample(state.position, t)
    v_rel = np.concatenate([state.lin_vel - rot.T @ flow, state.ang_vel])

    tau = params.thruster_matrix @ cmds
    tau = tau - params.linear_drag * v_rel - params.quadratic_drag * np.abs(v_rel) * v_rel
    tau = tau + restoring_wrench(state.orientation, params).as_vector()

    accel = tau / params._mass_diag
    v6 = np.concatenate([state.lin_vel, state.ang_vel]) + dt * accel
    lin_vel, ang_vel = v6[:3], v6[3:]

    position = state.position + dt * (rot @ lin_vel)
    orientation = quat.normalize(quat.multiply(state.orientation, quat.from_rotvec(dt * ang_vel)))

    if not (np.all(np.isfinite(position)) and np.all(np.isfinite(v6)) and np.all(np.isfinite(orientation))):
        raise NonFiniteState("vehicle state diverged")
    return VehicleState(position, orientation, lin_vel, ang_vel)


# --------------------------------------------------------------------------
# Parameter loading / default layout


def build_thruster_matrix(thrusters: list[dict]) -> np.ndarray:
    """Columns [direction; position x direction] for each thruster entry."""
    cols = []
    for th in thrusters:
        d = np.asarray(th["direction"], dtype=float)
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("thruster direction must be nonzero")
        d = d / n
        r = np.asarray(th["position"], dtype=float)
        cols.append(np.concatenate([d, np.cross(r, d)]))
    return np.stack(cols, axis=1)


def params_from_dict(cfg: dict) -> VehicleParams:
    mass = float(cfg["mass"])
    buoyancy = cfg.get("buoyancy_force", "neutral")
    if buoyancy == "neutral":
        buoyancy = mass * GRAVITY
    return VehicleParams(
        mass=mass,
        added_mass=np.asarray(cfg.get("added_mass", np.zeros(6)), dtype=float),
        linear_drag=np.asarray(cfg.get("linear_drag", np.zeros(6)), dtype=float),
        quadratic_drag=np.asarray(cfg.get("quadratic_drag", np.zeros(6)), dtype=float),
        buoyancy_force=float(buoyancy),
        center_of_buoyancy=np.asarray(cfg.get("center_of_buoyancy", (0, 0, 0)), dtype=float),
        inertia_diag=np.asarray(cfg.get("inertia_diag", (1, 1, 1)), dtype=float),
        thruster_matrix=build_thruster_matrix(cfg["thrusters"]),
        max_thrust=float(cfg.get("max_thrust", 50.0)),
    )


def default_params() -> VehicleParams:
    """The packaged 8-thruster vectored layout (4 horizontal at 45deg, 4 vertical)."""
    import importlib.resources

    import yaml

    text = importlib.resources.files("subsim").joinpath("data/rov8.yaml").read_text()
    return params_from_dict(yaml.safe_load(text))
