"""Virtual flight control unit and the simulated sensor feed.

The FCU consumes sensor frames, runs estimation and the arming/mode state
machine, and emits actuator commands plus telemetry - all over the wire
protocol on its three-port block, exactly like an external autopilot process
would.  One instance per robot; instances share nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat, wire
from .control import ControllerManager, JointTrajectoryMsg, ManagerConfig, TrajectoryError, TrajectoryPoint
from .dynamics import GRAVITY, VehicleParams, VehicleState, Wrench, allocate_thrust
from .estimation import EstimatorConfig, StateEstimator

DISARMED = wire.MODE_DISARMED
MANUAL = wire.MODE_MANUAL
GUIDED = wire.MODE_GUIDED

_MODE_NAMES = {DISARMED: "DISARMED", MANUAL: "MANUAL", GUIDED: "GUIDED"}


@dataclass(eq=False)
class SensorNoiseConfig:
    accel_std: float = 0.0  # m/s^2
    gyro_std: float = 0.0  # rad/s
    depth_std: float = 0.0  # m
    fix_std: float = 0.0  # m
    imu_rate: float = 50.0  # Hz
    depth_rate: float = 10.0
    fix_rate: float = 5.0

    def __post_init__(self):
        if min(self.accel_std, self.gyro_std, self.depth_std, self.fix_std) < 0:
            raise ValueError("noise stds must be >= 0")
        if min(self.imu_rate, self.depth_rate, self.fix_rate) <= 0:
            raise ValueError("sensor rates must be > 0")


@dataclass(eq=False)
class SensorReadings:
    t: float
    accel: np.ndarray | None = None  # body specific force
    gyro: np.ndarray | None = None
    depth: float | None = None
    fix: np.ndarray | None = None


def _due(tick: int, rate: float, dt: float) -> bool:
    period = max(1, round(1.0 / (rate * dt)))
    return tick % period == 0


def simulate_sensors(
    true_state: VehicleState, cfg: SensorNoiseConfig, rng: np.random.Generator, tick: int, dt: float
) -> SensorReadings:
    """Emit each sensor due on this tick: true value plus zero-mean noise.

    The accelerometer reports the quasi-static specific force (gravity
    direction in the body frame); the depth cell reports -z; the fix is the
    world position.
    """
    readings = SensorReadings(t=tick * dt)
    if _due(tick, cfg.imu_rate, dt):
        up_body = quat.rotate_inverse(true_state.orientation, np.array([0.0, 0.0, GRAVITY]))
        readings.accel = up_body + rng.normal(0.0, cfg.accel_std, 3) if cfg.accel_std else up_body
        gyro = true_state.ang_vel
        readings.gyro = gyro + rng.normal(0.0, cfg.gyro_std, 3) if cfg.gyro_std else gyro.copy()
    if _due(tick, cfg.depth_rate, dt):
        depth = -true_state.position[2]
        readings.depth = depth + float(rng.normal(0.0, cfg.depth_std)) if cfg.depth_std else depth
    if _due(tick, cfg.fix_rate, dt):
        fix = true_state.position
        readings.fix = fix + rng.normal(0.0, cfg.fix_std, 3) if cfg.fix_std else fix.copy()
    return readings


def readings_to_frame(r: SensorReadings, time_ms: int) -> wire.SensorState:
    flags = 0
    accel = gyro = (0.0, 0.0, 0.0)
    depth = 0.0
    fix = (0.0, 0.0, 0.0)
    if r.accel is not None:
        flags |= wire.SENSOR_HAS_IMU
        accel, gyro = tuple(r.accel), tuple(r.gyro)
    if r.depth is not None:
        flags |= wire.SENSOR_HAS_DEPTH
        depth = float(r.depth)
    if r.fix is not None:
        flags |= wire.SENSOR_HAS_FIX
        fix = tuple(r.fix)
    return wire.SensorState(accel, gyro, depth, fix, flags, time_ms)


def frame_to_readings(msg: wire.SensorState, t: float) -> SensorReadings:
    return SensorReadings(
        t=t,
        accel=np.array(msg.accel) if msg.flags & wire.SENSOR_HAS_IMU else None,
        gyro=np.array(msg.gyro) if msg.flags & wire.SENSOR_HAS_IMU else None,
        depth=msg.depth if msg.flags & wire.SENSOR_HAS_DEPTH else None,
        fix=np.array(msg.fix) if msg.flags & wire.SENSOR_HAS_FIX else None,
    )


@dataclass(eq=False)
class FcuConfig:
    tick_rate: float = 50.0
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    manager: ManagerConfig = field(default_factory=ManagerConfig)
    manual_force_max: tuple[float, float, float] = (30.0, 30.0, 30.0)  # N at full stick
    manual_torque_max: tuple[float, float, float] = (0.0, 0.0, 4.0)  # N*m at full stick


class Fcu:
    """One virtual autopilot instance."""

    def __init__(
        self,
        robot_index: int,
        params: VehicleParams,
        noise: SensorNoiseConfig,
        config: FcuConfig,
        initial_pose: np.ndarray,  # x, y, z, yaw
    ):
        self.robot_index = robot_index
        self.sys_id = wire.sys_id_for(robot_index)
        self.params = params
        self.config = config
        self.mode = DISARMED
        est_cfg = EstimatorConfig(
            q_process=config.estimator.q_process,
            r_fix=noise.fix_std**2 + 1e-12,
            r_depth=noise.depth_std**2 + 1e-12,
            initial_pos_var=config.estimator.initial_pos_var,
            initial_vel_var=config.estimator.initial_vel_var,
            attitude_alpha=config.estimator.attitude_alpha,
            covariance_ceiling=config.estimator.covariance_ceiling,
        )
        pose = np.asarray(initial_pose, dtype=float)
        self.estimator = StateEstimator(est_cfg, pose[:3], quat.from_yaw(pose[3]))
        self.manager = ControllerManager(robot_index, config.manager, pose)
        self.rc_axes = np.zeros(6)
        self.tick_count = 0
        self.miss_count = 0
        self._last_readings: SensorReadings | None = None
        self._pending_readings: SensorReadings | None = None
        self._traj_buffer: list[TrajectoryPoint] | None = None
        self._traj_expect = 0
        self._gcs_seq = wire.SeqCounter()
        self._fdm_seq = wire.SeqCounter()
        self.fdm_state_link = None
        self.fdm_cmd_link = None
        self.gcs_link = None
        self._fdm_parser = wire.FrameParser()
        self._gcs_parser = wire.FrameParser()

    # -- links ---------------------------------------------------------------

    def attach_links(self, fdm_state, fdm_cmd, gcs) -> None:
        self.fdm_state_link = fdm_state
        self.fdm_cmd_link = fdm_cmd
        self.gcs_link = gcs

    @property
    def armed(self) -> bool:
        return self.mode != DISARMED

    @property
    def mode_name(self) -> str:
        return _MODE_NAMES[self.mode]

    # -- command plane ---------------------------------------------------------

    def handle_command(self, msg: wire.Message) -> wire.Ack:
        """Apply one ground-side command; every command is acknowledged."""
        result = wire.ACK_DENIED
        if isinstance(msg, wire.Arm):
            if msg.flag:
                if self.mode == DISARMED:
                    self.mode = MANUAL
                    self.rc_axes[:] = 0.0
                result = wire.ACK_OK
            else:
                self._disarm()
                result = wire.ACK_OK
        elif isinstance(msg, wire.SetMode):
            result = self._set_mode(msg.mode)
        elif isinstance(msg, wire.RcOverride):
            if self.mode == MANUAL:
                self.rc_axes = np.asarray(msg.channels, dtype=float)
                result = wire.ACK_OK
            elif self.mode == GUIDED:
                # operator override wins over any active trajectory
                self.manager.teleop_input(np.asarray(msg.channels, dtype=float))
                result = wire.ACK_OK
        elif isinstance(msg, wire.TrajectoryHeader):
            if self.mode == GUIDED:
                self._traj_buffer = []
                self._traj_expect = msg.count
                result = wire.ACK_OK
        elif isinstance(msg, wire.TrajectorySetpoint):
            result = self._on_setpoint(msg)
        return wire.Ack(msg.MSG_ID, result)

    def _disarm(self) -> None:
        self.mode = DISARMED
        self.rc_axes[:] = 0.0
        self._traj_buffer = None
        est = self.estimator.state()
        self.manager.hold(np.append(est.position, quat.yaw_of(est.orientation)))

    def _set_mode(self, mode: int) -> int:
        if mode == DISARMED:
            self._disarm()
            return wire.ACK_OK
        if mode not in (MANUAL, GUIDED) or self.mode == DISARMED:
            return wire.ACK_DENIED
        if mode == GUIDED and self.mode != GUIDED:
            est = self.estimator.state()
            self.manager.hold(np.append(est.position, quat.yaw_of(est.orientation)))
        if mode == MANUAL:
            self.rc_axes[:] = 0.0
        self.mode = mode
        return wire.ACK_OK

    def _on_setpoint(self, msg: wire.TrajectorySetpoint) -> int:
        if self.mode != GUIDED:
            return wire.ACK_DENIED
        point = TrajectoryPoint((msg.x, msg.y, msg.z, msg.yaw), msg.time_from_start)
        now = self.tick_count / self.config.tick_rate
        if self._traj_buffer is not None:
            self._traj_buffer.append(point)
            if len(self._traj_buffer) >= self._traj_expect:
                points = sorted(self._traj_buffer, key=lambda p: p.time_from_start)
                self._traj_buffer = None
                try:
                    self.manager.trajectory_accept(JointTrajectoryMsg(self.robot_index, points), now)
                except TrajectoryError:
                    return wire.ACK_DENIED
            return wire.ACK_OK
        try:
            self.manager.trajectory_accept(
                JointTrajectoryMsg(self.robot_index, [TrajectoryPoint(point.positions, 0.0)]), now
            )
        except TrajectoryError:
            return wire.ACK_DENIED
        return wire.ACK_OK

    # -- main loop -------------------------------------------------------------

    def ingest_sensor_frame(self, msg: wire.SensorState, t: float) -> None:
        self._pending_readings = frame_to_readings(msg, t)

    def run_tick(self, t: float) -> wire.ActuatorCmd:
        """Service links, estimate, control, and emit the actuator command."""
        dt = 1.0 / self.config.tick_rate
        if self.gcs_link is not None:
            for datagram in self.gcs_link.recv_all():
                for frame in self._gcs_parser.feed(datagram):
                    if frame.sys_id not in (wire.GCS_SYS_ID, self.sys_id):
                        continue
                    ack = self.handle_command(frame.msg)
                    self._send_gcs(ack)
        if self.fdm_state_link is not None:
            for datagram in self.fdm_state_link.recv_all():
                for frame in self._fdm_parser.feed(datagram):
                    if isinstance(frame.msg, wire.SensorState):
                        self.ingest_sensor_frame(frame.msg, t)

        readings = self._pending_readings
        if readings is None:
            self.miss_count += 1
            readings = self._last_readings
        else:
            self._last_readings = readings
        self._pending_readings = None

        est = self.estimator.step(readings, dt)

        if self.mode == DISARMED:
            forces = np.zeros(self.params.thruster_count)
        else:
            if self.mode == MANUAL:
                wrench = Wrench(
                    force=self.rc_axes[:3] / 1000.0 * np.asarray(self.config.manual_force_max),
                    torque=self.rc_axes[3:] / 1000.0 * np.asarray(self.config.manual_torque_max),
                )
            else:
                wrench = self.manager.tick(est, t, dt)
            forces = allocate_thrust(wrench, self.params).forces

        cmd = wire.ActuatorCmd(tuple(forces))
        if self.fdm_cmd_link is not None:
            self.fdm_cmd_link.send(wire.encode(cmd, self._fdm_seq.next(), self.sys_id))
        self._emit_telemetry(est, t)
        self.tick_count += 1
        return cmd

    def _emit_telemetry(self, est, t: float) -> None:
        if self.gcs_link is None:
            return
        rate = self.config.tick_rate
        ms = int(round(t * 1000.0))
        if self.tick_count % max(1, round(rate)) == 0:
            self._send_gcs(wire.Heartbeat(self.mode, int(self.armed)))
        if self.tick_count % max(1, round(rate / 10.0)) == 0:
            self._send_gcs(wire.Attitude(wire.quat_to_tuple(est.orientation), tuple(est.ang_vel), ms))
            self._send_gcs(wire.LocalPosition(tuple(est.position), tuple(est.lin_vel), ms))

    def _send_gcs(self, msg: wire.Message) -> None:
        self.gcs_link.send(wire.encode(msg, self._gcs_seq.next(), self.sys_id))
