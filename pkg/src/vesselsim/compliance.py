"""Offline traffic-rule compliance monitoring and tracking statistics.

Give-way duties (crossing, head-on, overtaking) are judged with reaction
semantics: once the predicate has held for t_react, the vessel must within
t_maneuver either clear the predicate or show a course change of the
required size and direction. The stand-on duty is judged over every keep
interval that lasts at least t_react: course and speed must stay near
their values at the interval start.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import VesselState
from .geometry import wrap_angle
from .predicates import (PredicateParams, crossing, head_on, keep, overtake)
from .simulator import Trajectory, VesselTrack

RULES = ("r3_crossing", "r4_head_on", "r5_overtake", "r6_stand_on")


@dataclass
class RuleParams:
    """Monitor thresholds; predicate thresholds ride along."""

    t_maneuver: float = 90.0
    delta_turn: float = 0.15            # required starboard course change
    alpha_turn_overtake: float = 0.261  # required magnitude for overtaking
    course_keep_tol: float = 0.05       # stand-on course band, rad
    speed_keep_frac: float = 0.05       # stand-on speed band, fraction
    t_react: float = 30.0
    predicates: PredicateParams = field(default_factory=PredicateParams)


@dataclass
class PairCompliance:
    ego: str
    other: str
    outcomes: dict


@dataclass
class ComplianceReport:
    pairs: list[PairCompliance]
    per_vessel: dict

    def vessel_conjunction(self, vessel_id: str) -> bool:
        return all(self.per_vessel[vessel_id][r] for r in RULES)

    @property
    def all_ok(self) -> bool:
        return all(self.vessel_conjunction(v) for v in self.per_vessel)


def _states_of(track: VesselTrack) -> list[VesselState]:
    return [VesselState.from_array(row) for row in track.states]


def _true_runs(series: np.ndarray):
    """Yield (start, stop) index pairs of maximal True runs, stop exclusive."""
    i = 0
    n = len(series)
    while i < n:
        if not series[i]:
            i += 1
            continue
        j = i
        while j < n and series[j]:
            j += 1
        yield i, j
        i = j


def _give_way_ok(series: np.ndarray, phi: np.ndarray, react_steps: int,
                 maneuver_steps: int, turned) -> bool:
    n = len(series)
    for start, stop in _true_runs(series):
        if stop - start < react_steps:
            continue
        trig = start + react_steps - 1
        window_end = min(trig + maneuver_steps, n - 1)
        cleared = stop <= trig + maneuver_steps
        if cleared:
            continue
        base = phi[trig]
        if not any(turned(wrap_angle(phi[m] - base))
                   for m in range(trig, window_end + 1)):
            return False
    return True


def _stand_on_ok(series: np.ndarray, phi: np.ndarray, v: np.ndarray,
                 react_steps: int, course_tol: float,
                 speed_frac: float) -> bool:
    for start, stop in _true_runs(series):
        if stop - start < react_steps:
            continue
        base_phi = phi[start]
        base_v = v[start]
        for m in range(start, stop):
            if abs(wrap_angle(phi[m] - base_phi)) > course_tol:
                return False
            if abs(v[m] - base_v) > speed_frac * base_v:
                return False
    return True


def check_rules(trajectory: Trajectory,
                rules: RuleParams | None = None) -> ComplianceReport:
    """Judge every reactive vessel against every other vessel in the run."""
    if rules is None:
        rules = RuleParams()
    pred = rules.predicates
    dt = trajectory.dt
    react_steps = max(1, int(round(rules.t_react / dt)))
    maneuver_steps = max(1, int(round(rules.t_maneuver / dt)))

    states = {t.vessel_id: _states_of(t) for t in trajectory.tracks}
    pairs = []
    per_vessel: dict = {}
    for ego in trajectory.agent_tracks():
        ego_states = states[ego.vessel_id]
        phi = ego.states[:, 2]
        v = ego.states[:, 3]
        vessel_out = {r: True for r in RULES}
        for other in trajectory.tracks:
            if other.vessel_id == ego.vessel_id:
                continue
            other_states = states[other.vessel_id]
            n = min(len(ego_states), len(other_states))
            r3 = np.empty(n, dtype=bool)
            r4 = np.empty(n, dtype=bool)
            r5 = np.empty(n, dtype=bool)
            r6 = np.empty(n, dtype=bool)
            for k in range(n):
                sl, sm = ego_states[k], other_states[k]
                r3[k] = crossing(sl, sm, ego.params, other.params, pred)
                r4[k] = head_on(sl, sm, ego.params, other.params, pred)
                r5[k] = overtake(sl, sm, ego.params, other.params, pred)
                r6[k] = keep(sl, sm, ego.params, other.params, pred)
            outcomes = {
                "r3_crossing": _give_way_ok(
                    r3, phi, react_steps, maneuver_steps,
                    lambda d: d <= -rules.delta_turn),
                "r4_head_on": _give_way_ok(
                    r4, phi, react_steps, maneuver_steps,
                    lambda d: d <= -rules.delta_turn),
                "r5_overtake": _give_way_ok(
                    r5, phi, react_steps, maneuver_steps,
                    lambda d: abs(d) >= rules.alpha_turn_overtake),
                "r6_stand_on": _stand_on_ok(
                    r6, phi, v, react_steps, rules.course_keep_tol,
                    rules.speed_keep_frac),
            }
            pairs.append(PairCompliance(ego=ego.vessel_id,
                                        other=other.vessel_id,
                                        outcomes=outcomes))
            for r in RULES:
                vessel_out[r] = vessel_out[r] and outcomes[r]
        per_vessel[ego.vessel_id] = vessel_out
    return ComplianceReport(pairs=pairs, per_vessel=per_vessel)


@dataclass
class Moments:
    """Streaming count/sum/sum-of-squares for exact pooling."""

    n: int = 0
    s: float = 0.0
    s2: float = 0.0

    def add(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        values = values[~np.isnan(values)]
        self.n += values.size
        self.s += float(values.sum())
        self.s2 += float((values ** 2).sum())

    def merge(self, other: "Moments") -> None:
        self.n += other.n
        self.s += other.s
        self.s2 += other.s2

    @property
    def mean(self) -> float:
        return self.s / self.n if self.n else math.nan

    @property
    def std(self) -> float:
        if not self.n:
            return math.nan
        var = max(self.s2 / self.n - self.mean ** 2, 0.0)
        return math.sqrt(var)

    def to_tuple(self):
        return (self.n, self.s, self.s2)

    @classmethod
    def from_tuple(cls, t):
        return cls(n=int(t[0]), s=float(t[1]), s2=float(t[2]))


@dataclass
class TrackingStats:
    deviation: Moments
    accel: Moments
    yaw_rate: Moments


def tracking_stats(trajectory: Trajectory) -> TrackingStats:
    """Reference deviation and input-magnitude moments over agent steps.

    Steps without an active controller (finished or frozen vessels) carry
    NaN references and are excluded.
    """
    dev = Moments()
    acc = Moments()
    yaw = Moments()
    for track in trajectory.agent_tracks():
        refs = track.refs
        live = ~np.isnan(refs[:, 0])
        if not live.any():
            continue
        pos = track.states[:-1, :2][live]
        dev.add(np.linalg.norm(pos - refs[live], axis=1))
        acc.add(np.abs(track.inputs[live, 0]))
        yaw.add(np.abs(track.inputs[live, 1]))
    return TrackingStats(deviation=dev, accel=acc, yaw_rate=yaw)
