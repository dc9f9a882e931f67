"""Command-line entry points: `sim` and `bench`.

Exit codes: 0 clean, 2 configuration error, 3 runtime fault.
"""

from __future__ import annotations

import argparse
import sys

from .bench import PLANNER_ALIASES, ScenarioInvalid, sweep, write_report
from .scenario import ParseError, ValidationError, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def sim_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="sim", description="multi-robot underwater simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario")
    run.add_argument("scenario")
    run.add_argument("--headless", action="store_true", help="no API service, run to --duration at full speed")
    run.add_argument("--api", default=None, help="listen address, e.g. 127.0.0.1:8080 (overrides scenario)")
    run.add_argument("--transport", choices=["loopback", "udp"], default=None)
    run.add_argument("--duration", type=float, default=30.0, help="headless sim seconds")
    run.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        config = load_scenario(args.scenario)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .server import ConfigError, Simulation

    try:
        sim = Simulation(config, transport=args.transport, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.headless:
            sim.run_seconds(args.duration)
            frame = sim.state_frame()
            print(f"ran {sim.t:.2f} s sim time; collisions={frame['metrics']['collisions']}")
        else:
            from .api import serve

            listen = args.api or config.api_listen
            print(f"serving on ws://{listen}/ws (ctrl-c to stop)")
            serve(sim, listen)
    except KeyboardInterrupt:
        pass
    except Exception as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        sim.close()
    return EXIT_OK


def bench_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="bench", description="planner benchmark sweeps")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a sweep")
    run.add_argument("scenario")
    run.add_argument("--planners", default="rrtc", help="comma list: rrt,rrtc,prm")
    run.add_argument("--seeds", default="0..9", help="range 0..49 or comma list")
    run.add_argument("--out", default="report.csv", help="output path (.csv or .json)")
    args = parser.parse_args(argv)

    try:
        config = load_scenario(args.scenario)
        planners = []
        for name in args.planners.split(","):
            if name not in PLANNER_ALIASES:
                raise ParseError(f"unknown planner {name!r} (have {sorted(PLANNER_ALIASES)})")
            planners.append(PLANNER_ALIASES[name])
        seeds = _parse_seeds(args.seeds)
    except (ParseError, ValidationError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = sweep([config], planners, seeds)
        write_report(report, args.out)
    except ScenarioInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for row in report.aggregates():
        print(
            f"{row['scenario']} {row['planner']}: success {row['success_rate']:.0%} of {row['runs']}, "
            f"mean comp {row['mean_computation_time']:.3f}s, mean exec {row['mean_execution_time']:.2f}s"
        )
    print(f"wrote {args.out} ({len(report.records)} runs)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(sim_main())
