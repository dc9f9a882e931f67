"""Cascaded trajectory tracking: sampler -> pose PID -> velocity PID -> wrench.

One :class:`ControllerManager` per robot, sharing nothing.  The manager sits
behind the timed-waypoint trajectory interface so planners stay agnostic to
the controllers underneath; swap the PIDs by replacing the manager's two
controller stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat
from .dynamics import Wrench
from .estimation import EstimatedState

JOINT_NAMES = ("x", "y", "z", "yaw")

MODE_IDLE = "IDLE"
MODE_TRAJECTORY = "TRAJECTORY"
MODE_TELEOP = "TELEOP"


class TrajectoryError(Exception):
    pass


class EmptyTrajectory(TrajectoryError):
    pass


class NonMonotoneTime(TrajectoryError):
    pass


class WrongRobot(TrajectoryError):
    pass


@dataclass(frozen=True)
class TrajectoryPoint:
    positions: tuple[float, float, float, float]  # x, y, z, yaw
    time_from_start: float


@dataclass(eq=False)
class JointTrajectoryMsg:
    robot_index: int
    points: list[TrajectoryPoint]

    def __post_init__(self):
        if not self.points:
            raise EmptyTrajectory("trajectory needs at least one point")
        times = [p.time_from_start for p in self.points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise NonMonotoneTime("time_from_start must be strictly increasing")
        self.points = [
            TrajectoryPoint(
                (p.positions[0], p.positions[1], p.positions[2], quat.wrap_angle(p.positions[3])),
                p.time_from_start,
            )
            for p in self.points
        ]

    @property
    def duration(self) -> float:
        return self.points[-1].time_from_start


def sample_trajectory(traj: JointTrajectoryMsg, t: float) -> np.ndarray:
    """Setpoint at time t: linear in x/y/z, shortest-arc in yaw, held at ends."""
    pts = traj.points
    if t <= pts[0].time_from_start:
        return np.asarray(pts[0].positions, dtype=float)
    if t >= pts[-1].time_from_start:
        return np.asarray(pts[-1].positions, dtype=float)
    hi = 1
    while pts[hi].time_from_start < t:
        hi += 1
    a, b = pts[hi - 1], pts[hi]
    s = (t - a.time_from_start) / (b.time_from_start - a.time_from_start)
    out = np.empty(4)
    for k in range(3):
        out[k] = a.positions[k] + s * (b.positions[k] - a.positions[k])
    out[3] = quat.shortest_arc(a.positions[3], b.positions[3], s)
    return out


@dataclass(eq=False)
class PidGains:
    kp: np.ndarray
    ki: np.ndarray
    kd: np.ndarray
    integral_limit: np.ndarray

    def __post_init__(self):
        self.kp = np.asarray(self.kp, dtype=float)
        self.ki = np.asarray(self.ki, dtype=float)
        self.kd = np.asarray(self.kd, dtype=float)
        self.integral_limit = np.asarray(self.integral_limit, dtype=float)
        if np.any(self.kp < 0) or np.any(self.ki < 0) or np.any(self.kd < 0):
            raise ValueError("gains must be >= 0")
        if np.any(self.integral_limit <= 0):
            raise ValueError("integral_limit must be > 0")


class Pid:
    """Vector PID with clamped integral term (|ki * I| <= integral_limit)."""

    def __init__(self, gains: PidGains):
        self.gains = gains
        self.integral = np.zeros_like(gains.kp)
        self.prev_error: np.ndarray | None = None

    def reset(self) -> None:
        self.integral[:] = 0.0
        self.prev_error = None

    def step(self, error: np.ndarray, dt: float) -> np.ndarray:
        g = self.gains
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = np.where(g.ki > 0, g.integral_limit / np.where(g.ki > 0, g.ki, 1.0), np.inf)
        self.integral = np.clip(self.integral + error * dt, -cap, cap)
        deriv = np.zeros_like(error) if self.prev_error is None else (error - self.prev_error) / dt
        self.prev_error = error.copy()
        return g.kp * error + g.ki * self.integral + g.kd * deriv

    def integral_term(self) -> np.ndarray:
        return self.gains.ki * self.integral


def pose_controller(setpoint: np.ndarray, est: EstimatedState, pid: Pid, dt: float) -> np.ndarray:
    """World-frame pose error -> PID -> body-frame velocity command (vx,vy,vz,yaw_rate)."""
    err = np.empty(4)
    err[:3] = setpoint[:3] - est.position
    err[3] = quat.wrap_angle(setpoint[3] - quat.yaw_of(est.orientation))
    out = pid.step(err, dt)
    cmd = np.empty(4)
    cmd[:3] = quat.rotate_inverse(est.orientation, out[:3])
    cmd[3] = out[3]
    return cmd


def velocity_controller(vel_cmd: np.ndarray, est: EstimatedState, pid: Pid, dt: float) -> Wrench:
    """Body-frame velocity error -> PID -> body wrench (force xyz, torque z)."""
    body_vel = quat.rotate_inverse(est.orientation, est.lin_vel)
    err = np.empty(4)
    err[:3] = vel_cmd[:3] - body_vel
    err[3] = vel_cmd[3] - est.ang_vel[2]
    out = pid.step(err, dt)
    return Wrench(force=out[:3], torque=np.array([0.0, 0.0, out[3]]))


@dataclass(eq=False)
class ManagerConfig:
    pose_gains: PidGains = field(
        default_factory=lambda: PidGains(
            kp=(0.8, 0.8, 0.8, 1.2), ki=(0.02, 0.02, 0.02, 0.0), kd=(0.0, 0.0, 0.0, 0.0),
            integral_limit=(0.5, 0.5, 0.5, 0.5),
        )
    )
    vel_gains: PidGains = field(
        default_factory=lambda: PidGains(
            kp=(12.0, 12.0, 14.0, 4.0), ki=(5.0, 5.0, 6.0, 0.5), kd=(0.0, 0.0, 0.0, 0.0),
            integral_limit=(20.0, 20.0, 25.0, 4.0),
        )
    )
    teleop_vel_max: tuple[float, float, float] = (0.8, 0.8, 0.6)  # m/s at full stick
    teleop_yaw_rate_max: float = 0.8  # rad/s at full stick
    rp_damping: float = 0.4  # roll/pitch rate damping torque (vehicle self-rights)


class ControllerManager:
    """Per-robot control stack with trajectory, teleop-override and hold modes."""

    def __init__(self, robot_index: int, config: ManagerConfig, hold_pose: np.ndarray):
        self.robot_index = robot_index
        self.config = config
        self.mode = MODE_IDLE
        self.hold_pose = np.asarray(hold_pose, dtype=float).copy()
        self.trajectory: JointTrajectoryMsg | None = None
        self.traj_start_t: float | None = None
        self.teleop_axes = np.zeros(6)
        self.pose_pid = Pid(config.pose_gains)
        self.vel_pid = Pid(config.vel_gains)

    def trajectory_accept(self, traj: JointTrajectoryMsg, now: float) -> None:
        """Replace any active trajectory; its clock restarts at acceptance."""
        if traj.robot_index != self.robot_index:
            raise WrongRobot(f"trajectory for robot {traj.robot_index} sent to {self.robot_index}")
        self.trajectory = traj
        self.traj_start_t = now
        self.mode = MODE_TRAJECTORY
        self.pose_pid.reset()

    def teleop_input(self, axes) -> None:
        """Operator override: wins over any active trajectory on the same tick."""
        self.teleop_axes = np.asarray(axes, dtype=float)
        self.mode = MODE_TELEOP

    def hold(self, pose: np.ndarray) -> None:
        self.hold_pose = np.asarray(pose, dtype=float).copy()
        self.mode = MODE_IDLE
        self.trajectory = None
        self.pose_pid.reset()

    def active_setpoint(self, t: float) -> np.ndarray:
        if self.mode == MODE_TRAJECTORY and self.trajectory is not None:
            return sample_trajectory(self.trajectory, t - (self.traj_start_t or 0.0))
        return self.hold_pose

    def tick(self, est: EstimatedState, t: float, dt: float) -> Wrench:
        cfg = self.config
        if self.mode == MODE_TELEOP:
            vel_cmd = np.empty(4)
            vel_cmd[:3] = self.teleop_axes[:3] / 1000.0 * np.asarray(cfg.teleop_vel_max)
            vel_cmd[3] = self.teleop_axes[5] / 1000.0 * cfg.teleop_yaw_rate_max
        else:
            setpoint = self.active_setpoint(t)
            vel_cmd = pose_controller(setpoint, est, self.pose_pid, dt)
        wrench = velocity_controller(vel_cmd, est, self.vel_pid, dt)
        # keep roll/pitch quiet; buoyancy restoring does the heavy lifting
        wrench.torque[0] -= cfg.rp_damping * est.ang_vel[0]
        wrench.torque[1] -= cfg.rp_damping * est.ang_vel[1]
        return wrench


def manager_tick(mgr: ControllerManager, est: EstimatedState, t: float, dt: float) -> Wrench:
    return mgr.tick(est, t, dt)
