"""Scenario files: one YAML document describing world, fleet, and options."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .autopilot import FcuConfig, SensorNoiseConfig
from .collision import BodyGeometry, CollisionWorld
from .control import ManagerConfig, PidGains
from .dynamics import VehicleParams, default_params, params_from_dict
from .estimation import EstimatorConfig
from .world import CurrentField, EnvironmentSpec, WorldBounds, generate_environment


class ParseError(Exception):
    pass


class ValidationError(Exception):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(eq=False)
class RobotSpec:
    name: str
    params: VehicleParams
    start: np.ndarray  # x, y, z, yaw
    noise: SensorNoiseConfig = field(default_factory=SensorNoiseConfig)
    fcu: FcuConfig = field(default_factory=FcuConfig)
    radius: float = 0.35  # collision sphere

    def body(self, index: int) -> BodyGeometry:
        return BodyGeometry.sphere(index, self.radius)


@dataclass(eq=False)
class PlanningOptions:
    goals: np.ndarray | None = None  # (N, 4)
    planner: str = "rrt_connect"
    time_budget: float = 5.0
    validity_resolution: float = 0.1
    goal_tolerance: float = 0.25
    cruise_speed: float = 0.4
    yaw_rate: float = 0.5
    replan_rate: float = 2.0
    horizon: float = 5.0
    d_safe: float = 0.5
    max_failures: int = 3


@dataclass(eq=False)
class ScenarioConfig:
    name: str
    seed: int
    env_spec: EnvironmentSpec
    robots: list[RobotSpec]
    current: CurrentField = field(default_factory=CurrentField)
    tick_rate: float = 50.0
    transport: str = "loopback"
    port_base: int = 9000
    port_stride: int = 10
    api_listen: str = "127.0.0.1:8080"
    stream_rate: float = 20.0
    explicit_dynamic: list[dict] = field(default_factory=list)
    planning: PlanningOptions = field(default_factory=PlanningOptions)

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    def bodies(self) -> list[BodyGeometry]:
        return [r.body(i) for i, r in enumerate(self.robots)]

    def start_config(self) -> np.ndarray:
        return np.stack([r.start for r in self.robots])

    def build_environment(self):
        env = generate_environment(self.env_spec)
        for entry in self.explicit_dynamic:
            env.add_dynamic_obstacle(
                entry["position"], float(entry["radius"]), float(entry.get("buoyancy_bias", 0.0))
            )
        return env


def _vec(node, n, what) -> np.ndarray:
    arr = np.asarray(node, dtype=float)
    if arr.shape != (n,):
        raise ParseError(f"{what}: expected {n} numbers, got {node!r}")
    return arr


def _pose(node, what) -> np.ndarray:
    if isinstance(node, dict):
        pos = _vec(node.get("position", (0, 0, 0)), 3, f"{what}.position")
        return np.append(pos, float(node.get("yaw", 0.0)))
    return _vec(node, 4, what)


def _noise(node: dict | None) -> SensorNoiseConfig:
    return SensorNoiseConfig(**(node or {}))


def _gains(node: dict) -> PidGains:
    return PidGains(
        kp=node.get("kp", (0, 0, 0, 0)),
        ki=node.get("ki", (0, 0, 0, 0)),
        kd=node.get("kd", (0, 0, 0, 0)),
        integral_limit=node.get("integral_limit", (1, 1, 1, 1)),
    )


def _manager_config(node: dict | None) -> ManagerConfig:
    cfg = ManagerConfig()
    node = node or {}
    if "pose" in node:
        cfg.pose_gains = _gains(node["pose"])
    if "velocity" in node:
        cfg.vel_gains = _gains(node["velocity"])
    if "teleop_vel_max" in node:
        cfg.teleop_vel_max = tuple(node["teleop_vel_max"])
    if "teleop_yaw_rate_max" in node:
        cfg.teleop_yaw_rate_max = float(node["teleop_yaw_rate_max"])
    return cfg


def _environment_spec(node: dict, seed: int) -> EnvironmentSpec:
    bounds_node = node.get("bounds", {})
    bounds = WorldBounds(
        _vec(bounds_node.get("min", (-16, -16, -10)), 3, "bounds.min"),
        _vec(bounds_node.get("max", (16, 16, 0)), 3, "bounds.max"),
    )
    return EnvironmentSpec(
        seed=int(node.get("seed", seed)),
        grid_dims=tuple(node.get("grid_dims", (32, 32))),
        cell_size=float(node.get("cell_size", 1.0)),
        fill_prob=float(node.get("fill_prob", 0.0)),
        ca_iterations=int(node.get("ca_iterations", 4)),
        pillar_height_range=tuple(node.get("pillar_height_range", (1.0, 4.0))),
        dynamic_count=int(node.get("dynamic_count", 0)),
        dynamic_radius_range=tuple(node.get("dynamic_radius_range", (0.3, 0.6))),
        dynamic_buoyancy_bias_range=tuple(node.get("dynamic_buoyancy_bias_range", (-0.1, 0.1))),
        bounds=bounds,
    )


def _robot_spec(node: dict, base_dir: Path) -> RobotSpec:
    if "vehicle" in node:
        ref = node["vehicle"]
        if isinstance(ref, str):
            vehicle_path = (base_dir / ref).resolve()
            if not vehicle_path.exists():
                raise ParseError(f"robot {node.get('name')}: vehicle file {ref!r} not found")
            params = params_from_dict(yaml.safe_load(vehicle_path.read_text()))
        else:
            params = params_from_dict(ref)
    else:
        params = default_params()
    fcu = FcuConfig(manager=_manager_config(node.get("gains")))
    if "estimator" in node:
        fcu.estimator = EstimatorConfig(**node["estimator"])
    return RobotSpec(
        name=str(node["name"]),
        params=params,
        start=_pose(node.get("start", (0, 0, -5, 0)), "start"),
        noise=_noise(node.get("noise")),
        fcu=fcu,
        radius=float(node.get("radius", 0.35)),
    )


def _planning(node: dict | None, n_robots: int) -> PlanningOptions:
    node = node or {}
    opts = PlanningOptions()
    if "goals" in node:
        goals = np.array([_pose(g, "goal") for g in node["goals"]])
        if len(goals) != n_robots:
            raise ParseError(f"planning.goals: expected {n_robots} goals, got {len(goals)}")
        opts.goals = goals
    for key in (
        "planner",
        "time_budget",
        "validity_resolution",
        "goal_tolerance",
        "cruise_speed",
        "yaw_rate",
        "replan_rate",
        "horizon",
        "d_safe",
        "max_failures",
    ):
        if key in node:
            setattr(opts, key, node[key])
    return opts


def scenario_from_dict(doc: dict, base_dir: Path | None = None) -> ScenarioConfig:
    base_dir = base_dir or Path.cwd()
    try:
        seed = int(doc.get("seed", 0))
        robots = [_robot_spec(r, base_dir) for r in doc.get("robots", [])]
        ports = doc.get("ports", {})
        api = doc.get("api", {})
        current_node = doc.get("current", {})
        config = ScenarioConfig(
            name=str(doc.get("name", "scenario")),
            seed=seed,
            env_spec=_environment_spec(doc.get("environment", {}), seed),
            robots=robots,
            current=CurrentField(
                base=_vec(current_node.get("base", (0, 0, 0)), 3, "current.base"),
                gust_amplitude=_vec(current_node.get("gust_amplitude", (0, 0, 0)), 3, "current.gust_amplitude"),
                gust_period=float(current_node.get("gust_period", 60.0)),
                gust_phase=float(current_node.get("gust_phase", 0.0)),
            ),
            tick_rate=float(doc.get("tick_rate", 50.0)),
            transport=str(doc.get("transport", "loopback")),
            port_base=int(ports.get("base", 9000)),
            port_stride=int(ports.get("stride", 10)),
            api_listen=str(api.get("listen", "127.0.0.1:8080")),
            stream_rate=float(api.get("stream_rate", 20.0)),
            explicit_dynamic=list(doc.get("environment", {}).get("explicit_dynamic", [])),
            planning=_planning(doc.get("planning"), len(robots)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc
    _validate(config)
    return config


def _validate(config: ScenarioConfig) -> None:
    violations = []
    if not config.robots:
        violations.append("robots: at least one robot required")
    names = [r.name for r in config.robots]
    if len(set(names)) != len(names):
        violations.append(f"robots: duplicate names {sorted(n for n in names if names.count(n) > 1)}")
    if config.transport not in ("loopback", "udp"):
        violations.append(f"transport: {config.transport!r} is not loopback|udp")
    if config.tick_rate <= 0:
        violations.append("tick_rate: must be > 0")
    if config.robots:
        env = config.build_environment()
        world = CollisionWorld.from_snapshot(env.snapshot(0.0))
        start = config.start_config()
        bounds = config.env_spec.bounds
        for i, r in enumerate(config.robots):
            if not bounds.contains(start[i, :3]):
                violations.append(f"robots[{i}] {r.name}: start outside world bounds")
        report = world.query(start, config.bodies())
        for pair in report.pairs:
            violations.append(f"start poses collide: {pair.a} vs {pair.b} ({pair.kind})")
    if violations:
        raise ValidationError(violations)


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"scenario file {path} does not exist")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ParseError(f"invalid YAML{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("scenario file must contain a mapping")
    return scenario_from_dict(doc, path.parent)
