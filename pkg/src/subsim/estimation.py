"""Onboard state estimation.

Translation: three independent 2-state (position, velocity) Kalman filters
with a constant-velocity process model, fed by position fixes and the depth
sensor.  Attitude: gyro integration blended toward the accelerometer gravity
direction by a complementary filter.  Deliberately hand-checkable; it fills
the estimator slot of the autopilot without claiming fidelity to any
particular flight stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat


class FilterDivergence(Exception):
    """Covariance blew past the configured ceiling (mis-tuned filter)."""


@dataclass(eq=False)
class EstimatedState:
    position: np.ndarray
    lin_vel: np.ndarray  # world frame
    orientation: np.ndarray  # body -> world
    covariance: np.ndarray  # (3, 2, 2) per-axis [pos, vel] covariance
    ang_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))  # latest gyro, body

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.lin_vel = np.asarray(self.lin_vel, dtype=float)
        self.orientation = np.asarray(self.orientation, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        self.ang_vel = np.asarray(self.ang_vel, dtype=float)


@dataclass(eq=False)
class EstimatorConfig:
    q_process: float = 1.0  # white-acceleration PSD proxy (vehicle is actively driven)
    r_fix: float = 0.25
    r_depth: float = 0.01
    initial_pos_var: float = 1.0
    initial_vel_var: float = 0.25
    attitude_alpha: float = 0.02  # accel blend weight per sample
    covariance_ceiling: float = 1e6


class StateEstimator:
    """Per-axis linear Kalman + complementary attitude filter."""

    def __init__(self, cfg: EstimatorConfig, position, orientation=None):
        self.cfg = cfg
        self.x = np.zeros((3, 2))
        self.x[:, 0] = np.asarray(position, dtype=float)
        v = cfg.initial_pos_var
        self.P = np.tile(np.diag([v, cfg.initial_vel_var]), (3, 1, 1))
        self.q = quat.IDENTITY.copy() if orientation is None else np.asarray(orientation, dtype=float).copy()
        self.last_gyro = np.zeros(3)

    # measurement variances may be overridden per-robot from the noise config
    def predict(self, dt: float) -> None:
        qp = self.cfg.q_process
        f = np.array([[1.0, dt], [0.0, 1.0]])
        qm = qp * np.array([[0.25 * dt**4, 0.5 * dt**3], [0.5 * dt**3, dt * dt]])
        for ax in range(3):
            self.x[ax] = f @ self.x[ax]
            self.P[ax] = f @ self.P[ax] @ f.T + qm

    def update_position(self, axis: int, z: float, r: float) -> None:
        p = self.P[axis]
        s = p[0, 0] + r
        k0 = p[0, 0] / s
        k1 = p[1, 0] / s
        y = z - self.x[axis, 0]
        self.x[axis, 0] += k0 * y
        self.x[axis, 1] += k1 * y
        # Joseph-free standard form: P = (I - K H) P
        self.P[axis] = np.array(
            [
                [(1 - k0) * p[0, 0], (1 - k0) * p[0, 1]],
                [p[1, 0] - k1 * p[0, 0], p[1, 1] - k1 * p[0, 1]],
            ]
        )

    def _attitude_step(self, gyro, accel, dt: float) -> None:
        if gyro is not None:
            self.q = quat.normalize(quat.multiply(self.q, quat.from_rotvec(np.asarray(gyro) * dt)))
            self.last_gyro = np.asarray(gyro, dtype=float)
        if accel is not None:
            a = np.asarray(accel, dtype=float)
            norm = np.linalg.norm(a)
            if norm > 1e-6:
                up_meas = a / norm
                up_pred = quat.to_matrix(self.q).T @ np.array([0.0, 0.0, 1.0])
                # body-frame correction rotating the predicted up onto the measured up
                corr = np.cross(up_meas, up_pred)
                self.q = quat.normalize(
                    quat.multiply(self.q, quat.from_rotvec(self.cfg.attitude_alpha * corr))
                )

    def step(self, readings, dt: float) -> EstimatedState:
        """Advance one tick with whatever measurements arrived."""
        self.predict(dt)
        if readings is not None:
            self._attitude_step(readings.gyro, readings.accel, dt)
            if readings.fix is not None:
                for ax in range(3):
                    self.update_position(ax, float(readings.fix[ax]), self.cfg.r_fix)
            if readings.depth is not None:
                self.update_position(2, -float(readings.depth), self.cfg.r_depth)
        trace = float(np.trace(self.P.sum(axis=0)))
        if trace > self.cfg.covariance_ceiling:
            raise FilterDivergence(f"covariance trace {trace:.3g} exceeds ceiling")
        return self.state()

    def state(self) -> EstimatedState:
        return EstimatedState(
            position=self.x[:, 0].copy(),
            lin_vel=self.x[:, 1].copy(),
            orientation=self.q.copy(),
            covariance=self.P.copy(),
            ang_vel=self.last_gyro.copy(),
        )


def estimate_step(est: StateEstimator, readings, dt: float) -> EstimatedState:
    return est.step(readings, dt)
