"""Seeded scenario sweeps: run the full closed-loop pipeline and tabulate.

Every run owns a complete stack (environment, autopilots, controllers,
replanning executor) in loopback mode, so the numbers measure the real
pipeline.  Identical seeds produce identical environments across planner
arms; the per-run environment hash makes that checkable from the report.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import statistics
from dataclasses import asdict, dataclass, field

import numpy as np

from . import wire
from .planning.space import wrap_angles
from .scenario import ScenarioConfig
from .server import Simulation

PLANNER_ALIASES = {"rrt": "rrt", "rrtc": "rrt_connect", "rrt_connect": "rrt_connect", "prm": "prm"}

FAILURE_NONE = ""
FAILURE_PLAN_TIMEOUT = "PlanTimeout"
FAILURE_COLLISION = "CollisionInExecution"
FAILURE_EXEC_TIMEOUT = "ExecutionTimeout"
FAILURE_REPLAN = "ReplanFailed"


class ScenarioInvalid(Exception):
    pass


class IoFailure(Exception):
    pass


CSV_COLUMNS = [
    "scenario",
    "planner",
    "seed",
    "success",
    "computation_time",
    "execution_time",
    "path_length",
    "min_clearance_observed",
    "replan_count",
    "failure_kind",
    "env_hash",
]


@dataclass(eq=False)
class RunRecord:
    scenario: str
    planner: str
    seed: int
    success: bool
    computation_time: float
    execution_time: float
    path_length: float
    min_clearance_observed: float
    replan_count: int
    failure_kind: str
    env_hash: str


@dataclass(eq=False)
class Report:
    records: list[RunRecord] = field(default_factory=list)

    def aggregates(self) -> list[dict]:
        groups: dict[tuple[str, str], list[RunRecord]] = {}
        for r in self.records:
            groups.setdefault((r.scenario, r.planner), []).append(r)
        rows = []
        for (scenario, planner), runs in groups.items():
            succ = [r for r in runs if r.success]
            rows.append(
                {
                    "scenario": scenario,
                    "planner": planner,
                    "runs": len(runs),
                    "success_rate": len(succ) / len(runs),
                    "mean_computation_time": statistics.fmean(r.computation_time for r in runs),
                    "median_computation_time": statistics.median(r.computation_time for r in runs),
                    "mean_execution_time": statistics.fmean(r.execution_time for r in succ) if succ else float("nan"),
                    "median_execution_time": statistics.median(r.execution_time for r in succ) if succ else float("nan"),
                    "mean_path_length": statistics.fmean(r.path_length for r in succ) if succ else float("nan"),
                }
            )
        return rows


def _robot_goal_errors(sim: Simulation, goals: np.ndarray) -> np.ndarray:
    config = sim.true_config()
    dp = np.linalg.norm(config[:, :3] - goals[:, :3], axis=1)
    dyaw = np.abs(wrap_angles(config[:, 3] - goals[:, 3]))
    return dp + 0.5 * dyaw


def run_scenario(scenario: ScenarioConfig, planner: str, seed: int) -> RunRecord:
    """One full pipeline run: generate, spawn, plan, execute, record."""
    planner = PLANNER_ALIASES.get(planner, planner)
    if scenario.planning.goals is None:
        raise ScenarioInvalid("scenario has no planning goals")
    config = copy.deepcopy(scenario)
    config.env_spec.seed = seed

    sim = Simulation(config, seed=seed, track_clearance=True)
    env_hash = sim.env.content_hash()
    goals = np.asarray(config.planning.goals, dtype=float)

    record = RunRecord(
        scenario=config.name,
        planner=planner,
        seed=seed,
        success=False,
        computation_time=0.0,
        execution_time=0.0,
        path_length=0.0,
        min_clearance_observed=float("inf"),
        replan_count=0,
        failure_kind=FAILURE_NONE,
        env_hash=env_hash,
    )

    # bring the fleet up: arm, switch to guided, let commands propagate
    for i in range(len(config.robots)):
        sim.arm(i)
    sim.run_ticks(2)
    for i in range(len(config.robots)):
        sim.set_mode(i, wire.MODE_GUIDED)
    sim.run_ticks(2)

    result = sim.dispatch_plan(goals, planner=planner, seed=seed)
    record.computation_time = result.computation_time
    if result.outcome in ("StartInvalid", "GoalInvalid"):
        raise ScenarioInvalid(f"{result.outcome} for seed {seed}")
    if not result.solved:
        record.failure_kind = FAILURE_PLAN_TIMEOUT
        return record

    from .planning.space import CompositeSpace

    space = CompositeSpace(config.env_spec.bounds, len(config.robots))
    record.path_length = space.path_length(result.path)

    dispatch_t = sim.t
    nominal = max(traj.duration for traj in sim.executor.trajectories)
    deadline = dispatch_t + max(10.0 * nominal, 10.0)
    tol = config.planning.goal_tolerance

    while True:
        sim.tick()
        if sim.metrics.collisions > 0:
            record.failure_kind = FAILURE_COLLISION
            break
        if sim.executor is None and sim.executor_error is not None:
            record.failure_kind = FAILURE_REPLAN
            break
        if np.all(_robot_goal_errors(sim, goals) <= tol):
            record.success = True
            record.execution_time = sim.t - dispatch_t
            break
        if sim.t > deadline:
            record.failure_kind = FAILURE_EXEC_TIMEOUT
            break
    record.replan_count = sim.executor.replan_count if sim.executor is not None else sim.last_replan_count
    record.min_clearance_observed = sim.metrics.min_clearance
    return record


def sweep(scenarios: list[ScenarioConfig], planners: list[str], seeds: list[int]) -> Report:
    """Cross product of scenarios, planners and seeds; failures are data."""
    report = Report()
    for scenario in scenarios:
        for planner in planners:
            for seed in seeds:
                report.records.append(run_scenario(scenario, planner, seed))
    return report


# --------------------------------------------------------------------------
# Report I/O


def _record_to_row(r: RunRecord) -> list[str]:
    return [
        r.scenario,
        r.planner,
        str(r.seed),
        str(int(r.success)),
        repr(r.computation_time),
        repr(r.execution_time),
        repr(r.path_length),
        repr(r.min_clearance_observed),
        str(r.replan_count),
        r.failure_kind,
        r.env_hash,
    ]


def _record_from_row(row: list[str]) -> RunRecord:
    return RunRecord(
        scenario=row[0],
        planner=row[1],
        seed=int(row[2]),
        success=bool(int(row[3])),
        computation_time=float(row[4]),
        execution_time=float(row[5]),
        path_length=float(row[6]),
        min_clearance_observed=float(row[7]),
        replan_count=int(row[8]),
        failure_kind=row[9],
        env_hash=row[10],
    )


def write_report(report: Report, path: str, fmt: str | None = None) -> None:
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    try:
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in report.records:
                writer.writerow(_record_to_row(r))
            with open(path, "w") as f:
                f.write(buf.getvalue())
        elif fmt == "json":
            doc = {"columns": CSV_COLUMNS, "records": [asdict(r) for r in report.records], "aggregates": report.aggregates()}
            with open(path, "w") as f:
                json.dump(doc, f, indent=2, allow_nan=True)
        else:
            raise IoFailure(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_report(path: str) -> Report:
    try:
        if str(path).endswith(".json"):
            with open(path) as f:
                doc = json.load(f)
            return Report([RunRecord(**rec) for rec in doc["records"]])
        with open(path) as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if not rows or rows[0] != CSV_COLUMNS:
        raise IoFailure("unrecognized report header")
    return Report([_record_from_row(row) for row in rows[1:]])
