"""Command line front end.

Subcommands: simulate, generate, batch, check, profile. Report paths write
delimited output (CSV/JSONL) with rendered figures alongside. Exit codes:
0 success, 1 validation problem (arguments, files, schemas), 2 runtime
failure. Set VESSELSIM_LOG=debug|info|warning to control verbosity.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .batch import batch_run
from .compliance import RuleParams, check_rules
from .dynamics import VESSEL_TYPES
from .scenarios import (GeneratorConfig, MIXES, export_trajectory,
                        generate_critical, import_trajectory, load_scenario,
                        save_scenario)
from .simulator import run, runtime_profile

log = logging.getLogger("vesselsim")


def _setup_logging():
    level = os.environ.get("VESSELSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vesselsim",
        description="COLREGS-reactive maritime traffic simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--out", default=None,
                   help="report directory (default: <scenario stem>_out)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering")

    p = sub.add_parser("generate", help="generate critical scenarios")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mix", choices=MIXES, default="random")
    p.add_argument("--type", dest="vessel_type", choices=sorted(VESSEL_TYPES),
                   default="type1")

    p = sub.add_parser("batch", help="run a directory of scenarios")
    p.add_argument("scenarios", help="directory containing scenario JSON")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--mixed", action="store_true",
                   help="demote vessel v1 to a non-reactive obstacle")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("check", help="rule-compliance check of a trajectory")
    p.add_argument("trajectory", help="trajectory CSV (exported or external)")
    p.add_argument("--type", dest="vessel_type", choices=sorted(VESSEL_TYPES),
                   default="type1")

    p = sub.add_parser("profile", help="runtime scaling profile")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--vessels", type=int, default=6)
    p.add_argument("--steps", type=int, default=120)
    p.add_argument("--no-figures", action="store_true")
    return parser


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    out = Path(args.out) if args.out else Path(
        Path(args.scenario).stem + "_out")
    out.mkdir(parents=True, exist_ok=True)
    trajectory, result = run(scenario)
    export_trajectory(trajectory, out / "trajectory.csv")
    report = check_rules(trajectory)
    payload = {
        "scenario": scenario.name,
        "steps": result.steps,
        "collision": result.collision,
        "collision_pair": (list(result.collision_pair)
                           if result.collision_pair else None),
        "goal_reached": result.goal_reached,
        "rules": report.per_vessel,
        "solver_failures": result.solver_failures,
    }
    (out / "report.json").write_text(json.dumps(payload, indent=1))
    if not args.no_figures:
        from . import plots
        plots.save_trajectory_figure(trajectory, out / "trajectory.png",
                                     scenario)
        plots.save_controls_figure(trajectory, out / "controls.png")
    status = "collision" if result.collision else (
        "all goals reached" if result.all_goals_reached else "timeout")
    print(f"{scenario.name}: {status} after {result.steps} steps "
          f"-> {out}")
    return 0


def _cmd_generate(args) -> int:
    config = GeneratorConfig(count=args.count, seed=args.seed, mix=args.mix,
                             vessel_type=args.vessel_type)
    scenarios = generate_critical(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for scenario in scenarios:
        save_scenario(scenario, out / f"{scenario.name}.json")
    print(f"wrote {len(scenarios)} scenarios to {out}")
    return 0


def _cmd_batch(args) -> int:
    directory = Path(args.scenarios)
    files = sorted(directory.glob("*.json"))
    if not files:
        raise ValueError(f"no scenario files in {directory}")
    scenarios = [load_scenario(f) for f in files]
    out = Path(args.out)
    summary, _ = batch_run(scenarios, mixed=args.mixed, jobs=args.jobs,
                           out_dir=out)
    if not args.no_figures:
        from . import plots
        plots.save_rule_rates_figure(summary.to_dict(),
                                     out / "rule_rates.png")
    print(f"{summary.runs} runs: goal rate {summary.goal_rate:.3f}, "
          f"collision rate {summary.collision_rate:.3f}, "
          f"compliance {summary.compliance_rate:.3f} -> {out}")
    return 0


def _cmd_check(args) -> int:
    params = VESSEL_TYPES[args.vessel_type]()
    trajectory = import_trajectory(args.trajectory, params)
    report = check_rules(trajectory, RuleParams())
    for vid, out in sorted(report.per_vessel.items()):
        flags = ", ".join(f"{rule}={'ok' if ok else 'VIOLATION'}"
                          for rule, ok in out.items())
        print(f"{vid}: {flags}")
    print("compliant" if report.all_ok else "violations found")
    return 0


def _cmd_profile(args) -> int:
    rows = runtime_profile(max_vessels=args.vessels, steps=args.steps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "profile.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    if not args.no_figures:
        from . import plots
        plots.save_profile_figure(rows, out / "profile.png")
    for row in rows:
        print(f"{row['vessels']} vessels: {1e3 * row['step_time']:.2f} ms/step "
              f"(mpc {1e3 * row['mpc_time']:.2f}, "
              f"waypoints {1e3 * row['waypoint_time']:.2f})")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "generate": _cmd_generate,
    "batch": _cmd_batch,
    "check": _cmd_check,
    "profile": _cmd_profile,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map those to validation (1)
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("unhandled failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
