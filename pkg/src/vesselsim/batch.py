"""Batch simulation over scenario sets with pooled statistics.

Each run reduces to a flat JSON record; the summary pools goal/collision/
rule rates over (run, vessel) and tracking moments over controller steps.
Workers only need the scenario object, so runs parallelize per scenario.
"""
from __future__ import annotations

import json
import logging
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path

from .compliance import (Moments, RULES, RuleParams, check_rules,
                         tracking_stats)
from .scenarios import to_mixed
from .simulator import Scenario, run

log = logging.getLogger(__name__)


def run_record(scenario: Scenario,
               rules: RuleParams | None = None) -> dict:
    """Simulate one scenario and reduce it to a JSON-friendly record."""
    trajectory, result = run(scenario)
    report = check_rules(trajectory, rules)
    stats = tracking_stats(trajectory)
    return {
        "scenario": scenario.name,
        "steps": result.steps,
        "collision": bool(result.collision),
        "collision_pair": (list(result.collision_pair)
                           if result.collision_pair else None),
        "goal_reached": {k: bool(v) for k, v in result.goal_reached.items()},
        "rules": {vid: {r: bool(ok) for r, ok in out.items()}
                  for vid, out in report.per_vessel.items()},
        "compliant": {vid: report.vessel_conjunction(vid)
                      for vid in report.per_vessel},
        "tracking": {
            "deviation": stats.deviation.to_tuple(),
            "accel": stats.accel.to_tuple(),
            "yaw_rate": stats.yaw_rate.to_tuple(),
        },
        "mpc_time": result.mpc_time,
        "waypoint_time": result.waypoint_time,
        "solver_failures": result.solver_failures,
    }


def _worker(args) -> dict:
    scenario, rules = args
    return run_record(scenario, rules)


@dataclass
class BatchSummary:
    runs: int = 0
    vessel_runs: int = 0
    goal_rate: float = 0.0
    collision_rate: float = 0.0
    rule_rates: dict = field(default_factory=dict)
    compliance_rate: float = 0.0
    deviation: Moments = field(default_factory=Moments)
    accel: Moments = field(default_factory=Moments)
    yaw_rate: Moments = field(default_factory=Moments)
    solver_failures: int = 0
    mpc_time: float = 0.0
    waypoint_time: float = 0.0
    steps: int = 0

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "vessel_runs": self.vessel_runs,
            "goal_rate": self.goal_rate,
            "collision_rate": self.collision_rate,
            "rule_rates": dict(self.rule_rates),
            "compliance_rate": self.compliance_rate,
            "tracking": {
                "deviation_mean": self.deviation.mean,
                "deviation_std": self.deviation.std,
                "accel_mean": self.accel.mean,
                "yaw_rate_mean": self.yaw_rate.mean,
            },
            "solver_failures": self.solver_failures,
            "mpc_time": self.mpc_time,
            "waypoint_time": self.waypoint_time,
            "steps": self.steps,
        }


def summarize(records: list[dict]) -> BatchSummary:
    """Pool per-run records; rates average over (run, vessel) pairs."""
    summary = BatchSummary()
    goals = 0
    compliant = 0
    collisions = 0
    rule_hits = {r: 0 for r in RULES}
    rule_total = 0
    for rec in records:
        summary.runs += 1
        collisions += bool(rec["collision"])
        for ok in rec["goal_reached"].values():
            summary.vessel_runs += 1
            goals += bool(ok)
        for out in rec["rules"].values():
            rule_total += 1
            for r in RULES:
                rule_hits[r] += bool(out[r])
        for ok in rec["compliant"].values():
            compliant += bool(ok)
        summary.deviation.merge(Moments.from_tuple(rec["tracking"]["deviation"]))
        summary.accel.merge(Moments.from_tuple(rec["tracking"]["accel"]))
        summary.yaw_rate.merge(Moments.from_tuple(rec["tracking"]["yaw_rate"]))
        summary.solver_failures += rec["solver_failures"]
        summary.mpc_time += rec["mpc_time"]
        summary.waypoint_time += rec["waypoint_time"]
        summary.steps += rec["steps"]
    if summary.runs:
        summary.collision_rate = collisions / summary.runs
    if summary.vessel_runs:
        summary.goal_rate = goals / summary.vessel_runs
    if rule_total:
        summary.rule_rates = {r: rule_hits[r] / rule_total for r in RULES}
        summary.compliance_rate = compliant / rule_total
    else:
        summary.rule_rates = {r: 1.0 for r in RULES}
        summary.compliance_rate = 1.0
    return summary


def batch_run(scenarios: list[Scenario],
              rules: RuleParams | None = None,
              mixed: bool = False,
              jobs: int = 1,
              out_dir=None) -> tuple[BatchSummary, list[dict]]:
    """Run every scenario, optionally with vessel v1 demoted to an obstacle.

    With out_dir set, writes runs.jsonl (one record per line) and
    summary.json. Records keep scenario order regardless of jobs.
    """
    if mixed:
        scenarios = [to_mixed(s) for s in scenarios]
    tasks = [(s, rules) for s in scenarios]
    if jobs > 1 and len(tasks) > 1:
        with multiprocessing.Pool(processes=jobs) as pool:
            records = pool.map(_worker, tasks, chunksize=1)
    else:
        records = [_worker(t) for t in tasks]
    summary = summarize(records)
    log.info("batch: %d runs, goal rate %.3f, collision rate %.3f",
             summary.runs, summary.goal_rate, summary.collision_rate)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "runs.jsonl").open("w") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
        (out / "summary.json").write_text(
            json.dumps(summary.to_dict(), indent=1))
    return summary, records
