"""Lockstep orchestrator: world + N virtual autopilots + ground proxy.

Each tick, per robot: the world emits a sensor frame on the robot's
fdm_state link, the FCU ingests it, runs estimation/control and replies with
an actuator frame on fdm_cmd, and the world integrates the dynamics with
those commands.  Obstacles advect, telemetry is routed onto the topic bus,
and (optionally) a ground-truth collision check records safety metrics.
Loopback transport makes the whole loop strictly deterministic; UDP mode
relaxes to deadline-with-reuse to exercise loss handling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import quat, rng as rngmod, wire
from .autopilot import Fcu, readings_to_frame, simulate_sensors
from .collision import CollisionWorld
from .dynamics import VehicleState, dynamics_step
from .gcs import GcsProxy, TopicBus, topic_name
from .geometry import Box, Sphere
from .planning import ExecutorConfig, PlanRequest, ReplanExecutor, ReplanFailed
from .scenario import ScenarioConfig
from .transport import UdpLink, loopback_pair


class ConfigError(Exception):
    pass


@dataclass(eq=False)
class TickMetrics:
    collisions: int = 0
    first_collision_t: float | None = None
    min_clearance: float = float("inf")
    missed_actuator_frames: int = 0
    missed_sensor_frames: int = 0


@dataclass(eq=False)
class RobotRuntime:
    name: str
    fcu: Fcu
    state: VehicleState
    rng: np.random.Generator
    sim_state_link: object  # world -> FCU sensors
    sim_cmd_link: object  # FCU -> world actuators
    last_cmds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cmd_parser: wire.FrameParser = field(default_factory=wire.FrameParser)
    sensor_seq: wire.SeqCounter = field(default_factory=wire.SeqCounter)


class Simulation:
    """One scenario instance driven tick by tick."""

    def __init__(
        self,
        config: ScenarioConfig,
        transport: str | None = None,
        seed: int | None = None,
        track_clearance: bool = False,
    ):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.transport = transport or config.transport
        if self.transport not in ("loopback", "udp"):
            raise ConfigError(f"unknown transport {self.transport!r}")
        self.dt = config.dt
        self.tick_index = 0
        self.track_clearance = track_clearance
        self.metrics = TickMetrics()

        self.env = config.build_environment()
        self.current = config.current
        self.bodies = config.bodies()
        self._static_world = (
            CollisionWorld(
                [
                    (f"s{k}", Box(self.env.static_centers[k], self.env.static_halves[k]))
                    for k in range(len(self.env.static_centers))
                ]
            )
            if len(self.env.static_centers)
            else None
        )

        self.registry = wire.PortRegistry(config.port_base, config.port_stride)
        self.bus = TopicBus()
        self.proxy = GcsProxy(self.bus)
        self.robots: list[RobotRuntime] = []
        self._udp_links: list[UdpLink] = []
        for i, spec in enumerate(config.robots):
            block = self.registry.allocate(i)
            fcu = Fcu(i, spec.params, spec.noise, spec.fcu, spec.start)
            if self.transport == "loopback":
                sim_state, fcu_state = loopback_pair()
                fcu_cmd, sim_cmd = loopback_pair()
                proxy_gcs, fcu_gcs = loopback_pair()
            else:
                try:
                    host = "127.0.0.1"
                    sim_state = UdpLink(0, (host, block.fdm_state))
                    fcu_state = UdpLink(block.fdm_state)
                    fcu_cmd = UdpLink(0, (host, block.fdm_cmd))
                    sim_cmd = UdpLink(block.fdm_cmd)
                    proxy_gcs = UdpLink(0, (host, block.gcs_link))
                    fcu_gcs = UdpLink(block.gcs_link)
                except OSError as exc:
                    raise ConfigError(f"cannot bind ports for robot {spec.name}: {exc}") from exc
                self._udp_links += [sim_state, fcu_state, fcu_cmd, sim_cmd, proxy_gcs, fcu_gcs]
            fcu.attach_links(fcu_state, fcu_cmd, fcu_gcs)
            self.proxy.attach_robot(i, proxy_gcs)
            self.robots.append(
                RobotRuntime(
                    name=spec.name,
                    fcu=fcu,
                    state=VehicleState(position=spec.start[:3].copy(), orientation=quat.from_yaw(spec.start[3])),
                    rng=rngmod.robot_stream(self.seed, i),
                    sim_state_link=sim_state,
                    sim_cmd_link=sim_cmd,
                    last_cmds=np.zeros(spec.params.thruster_count),
                )
            )
        self.executor: ReplanExecutor | None = None
        self.executor_error: str | None = None
        self.last_replan_count = 0
        self._plan_status = "none"

    # -- time ----------------------------------------------------------------

    @property
    def t(self) -> float:
        return self.tick_index * self.dt

    # -- command surface -------------------------------------------------------

    def send_command(self, robot_index: int, msg: wire.Message) -> None:
        self.bus.publish(topic_name(robot_index, "cmd"), msg)

    def arm(self, robot_index: int) -> None:
        self.send_command(robot_index, wire.Arm(1))

    def disarm(self, robot_index: int) -> None:
        self.send_command(robot_index, wire.Arm(0))

    def set_mode(self, robot_index: int, mode: int) -> None:
        self.send_command(robot_index, wire.SetMode(mode))

    def teleop(self, robot_index: int, axes) -> None:
        self.send_command(robot_index, wire.RcOverride(tuple(int(a) for a in axes)))

    def dispatch_plan(self, goals: np.ndarray, planner: str | None = None, seed: int | None = None):
        """Arm+guide the fleet, plan from current estimates, start the executor."""
        opts = self.config.planning
        request = PlanRequest(
            start=self.estimated_config(),
            goal=np.asarray(goals, dtype=float),
            planner=planner or opts.planner,
            time_budget=opts.time_budget,
            validity_resolution=opts.validity_resolution,
            goal_tolerance=opts.goal_tolerance,
            seed=self.seed if seed is None else seed,
        )
        executor = ReplanExecutor(
            goals=np.asarray(goals, dtype=float),
            robots=self.bodies,
            bounds=self.config.env_spec.bounds,
            request_template=request,
            config=ExecutorConfig(
                replan_rate=opts.replan_rate,
                horizon=opts.horizon,
                d_safe=opts.d_safe,
                max_failures=opts.max_failures,
                cruise_speed=opts.cruise_speed,
                yaw_rate=opts.yaw_rate,
            ),
            dispatch=self._dispatch_trajectories,
        )
        self.executor_error = None
        # snapshot + plan before attaching: in live mode the tick loop keeps
        # running and must not see a half-started executor (or snapshot a
        # newer timestamp than the worker thread is about to use)
        snap = self.env.snapshot(self.t)
        result = executor.start(self.estimated_config(), snap, self.t)
        self._plan_status = result.outcome
        if result.solved:
            self.executor = executor
        return result

    def _dispatch_trajectories(self, trajectories) -> None:
        for traj in trajectories:
            self.send_command(traj.robot_index, traj)

    # -- state access ------------------------------------------------------------

    def true_config(self) -> np.ndarray:
        q = np.empty((len(self.robots), 4))
        for i, r in enumerate(self.robots):
            q[i, :3] = r.state.position
            q[i, 3] = quat.yaw_of(r.state.orientation)
        return q

    def estimated_config(self) -> np.ndarray:
        """Composite config from the telemetry on the bus (falls back to FCU state)."""
        q = np.empty((len(self.robots), 4))
        for i in range(len(self.robots)):
            pos_msg = self.bus.latest(topic_name(i, "state"))
            att_msg = self.bus.latest(topic_name(i, "attitude"))
            if pos_msg is None or att_msg is None:
                est = self.robots[i].fcu.estimator.state()
                q[i, :3] = est.position
                q[i, 3] = quat.yaw_of(est.orientation)
            else:
                q[i, :3] = pos_msg.position
                q[i, 3] = quat.yaw_of(np.asarray(att_msg.quat))
        return q

    def state_frame(self) -> dict:
        robots = []
        for i, r in enumerate(self.robots):
            est = r.fcu.estimator.state()
            robots.append(
                {
                    "name": r.name,
                    "true_position": [round(float(v), 4) for v in r.state.position],
                    "true_yaw": round(quat.yaw_of(r.state.orientation), 4),
                    "est_position": [round(float(v), 4) for v in est.position],
                    "est_yaw": round(quat.yaw_of(est.orientation), 4),
                    "mode": r.fcu.mode_name,
                    "armed": r.fcu.armed,
                }
            )
        return {
            "type": "state",
            "t": round(self.t, 4),
            "robots": robots,
            "dynamic_obstacles": [
                {"id": k, "position": [round(float(v), 4) for v in self.env.dyn_centers[k]], "radius": float(self.env.dyn_radii[k])}
                for k in range(len(self.env.dyn_centers))
            ],
            "plan": {
                "status": self._plan_status,
                "replans": self.executor.replan_count if self.executor else self.last_replan_count,
                "holds": self.executor.hold_count if self.executor else 0,
                "paths": self._active_paths(),
            },
            "metrics": {
                "collisions": self.metrics.collisions,
                "missed_actuator_frames": self.metrics.missed_actuator_frames,
                "proxy_drops": self.proxy.counters.decode_drops,
            },
        }

    def scene_description(self) -> dict:
        b = self.config.env_spec.bounds
        return {
            "type": "hello",
            "bounds": {"min": [float(v) for v in b.min], "max": [float(v) for v in b.max]},
            "static_obstacles": [
                {
                    "center": [float(v) for v in self.env.static_centers[k]],
                    "half_extents": [float(v) for v in self.env.static_halves[k]],
                }
                for k in range(len(self.env.static_centers))
            ],
            "robots": [{"name": r.name, "radius": s.radius} for r, s in zip(self.robots, self.config.robots)],
            "tick_rate": self.config.tick_rate,
        }

    def _active_paths(self):
        if self.executor is None or self.executor.trajectories is None:
            return []
        return [
            [[round(float(v), 3) for v in p.positions] for p in traj.points]
            for traj in self.executor.trajectories
        ]

    # -- lockstep loop ----------------------------------------------------------

    def tick(self) -> None:
        t = self.t
        # 1. world -> sensor frames
        for r in self.robots:
            readings = simulate_sensors(
                r.state, self.config.robots[r.fcu.robot_index].noise, r.rng, self.tick_index, self.dt
            )
            frame = readings_to_frame(readings, int(round(t * 1000.0)))
            r.sim_state_link.send(wire.encode(frame, r.sensor_seq.next(), wire.GCS_SYS_ID))
        # 2. autopilots
        for r in self.robots:
            r.fcu.run_tick(t)
        # 3. actuator frames -> dynamics
        for r in self.robots:
            cmds = None
            for datagram in r.sim_cmd_link.recv_all():
                for frame in r.cmd_parser.feed(datagram):
                    if isinstance(frame.msg, wire.ActuatorCmd):
                        cmds = np.asarray(frame.msg.forces)
            if cmds is None:
                cmds = r.last_cmds
                self.metrics.missed_actuator_frames += 1
            r.last_cmds = cmds
            r.state = dynamics_step(
                r.state, self.config.robots[r.fcu.robot_index].params, cmds, self.current, t, self.dt
            )
        # 4. environment
        self.env.step_obstacles(self.dt, self.current, t)
        # 5. telemetry routing
        self.proxy.poll()
        # 6. online replanning
        if self.executor is not None and self.executor.due(t + self.dt):
            try:
                self.executor.tick(self.estimated_config(), self.env.snapshot(t + self.dt), t + self.dt)
            except ReplanFailed as exc:
                self.executor_error = str(exc)
                self._plan_status = "ReplanFailed"
                self.last_replan_count = self.executor.replan_count
                self.executor = None
        # 7. ground-truth safety check
        self._ground_truth_check()
        self.tick_index += 1

    def _ground_truth_check(self) -> None:
        config = self.true_config()
        colliding = False
        if self._static_world is not None and self._static_world.collides(config, self.bodies):
            colliding = True
        clear = float("inf")
        if len(self.env.dyn_centers):
            for i, spec in enumerate(self.config.robots):
                d = (
                    np.linalg.norm(self.env.dyn_centers - config[i, :3], axis=1)
                    - self.env.dyn_radii
                    - spec.radius
                )
                dmin = float(np.min(d))
                clear = min(clear, dmin)
                if dmin <= 0.0:
                    colliding = True
        for i in range(len(self.robots)):
            for j in range(i + 1, len(self.robots)):
                d = float(np.linalg.norm(config[i, :3] - config[j, :3])) - (
                    self.config.robots[i].radius + self.config.robots[j].radius
                )
                clear = min(clear, d)
                if d <= 0.0:
                    colliding = True
        if self.track_clearance and self._static_world is not None:
            for i, spec in enumerate(self.config.robots):
                clear = min(clear, self._static_world.min_distance_to(Sphere(config[i, :3], spec.radius)))
        if colliding:
            self.metrics.collisions += 1
            if self.metrics.first_collision_t is None:
                self.metrics.first_collision_t = self.t
        self.metrics.min_clearance = min(self.metrics.min_clearance, clear)

    def run_ticks(self, n: int) -> None:
        for _ in range(n):
            self.tick()

    def run_seconds(self, seconds: float) -> None:
        self.run_ticks(int(round(seconds / self.dt)))

    def run_realtime(self, seconds: float, stop_flag=None) -> None:
        """Paced loop for interactive serving."""
        start = time.perf_counter()
        end_tick = self.tick_index + int(round(seconds / self.dt))
        first_tick = self.tick_index
        while self.tick_index < end_tick:
            if stop_flag is not None and stop_flag.is_set():
                return
            self.tick()
            target = start + (self.tick_index - first_tick) * self.dt
            delay = target - time.perf_counter()
            if delay > 0:
                time.sleep(delay)

    def close(self) -> None:
        for link in self._udp_links:
            link.close()


def run_lockstep(config: ScenarioConfig, **kwargs) -> Simulation:
    return Simulation(config, **kwargs)
