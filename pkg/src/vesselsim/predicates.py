"""COLREGS encounter predicates over vessel state pairs.

The ego vessel is the first argument of every predicate; naming follows the
give-way perspective, e.g. crossing(s_l, s_m) means l must give way to m in
a crossing encounter. Vessels are abstracted to discs of radius (l + w) / 4
for the velocity-cone collision check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dynamics import VesselParams, VesselState
from .geometry import wrap_angle


class EncounterKind(Enum):
    NONE = "none"
    HEAD_ON_GIVE_WAY = "head_on_give_way"
    CROSSING_GIVE_WAY = "crossing_give_way"
    OVERTAKE_GIVE_WAY = "overtake_give_way"
    STAND_ON = "stand_on"


GIVE_WAY_KINDS = (EncounterKind.HEAD_ON_GIVE_WAY,
                  EncounterKind.CROSSING_GIVE_WAY,
                  EncounterKind.OVERTAKE_GIVE_WAY)


@dataclass(frozen=True)
class PredicateParams:
    """Thresholds for the encounter predicates."""

    t_horizon: float = 420.0
    t_horizon_check: float = 420.0
    delta_head_on: float = math.radians(10.0)
    speed_factor: float = 1.1
    side_sector: float = math.radians(112.5)       # beam sector boundary
    overtake_band: float = math.radians(67.5)      # aligned-heading band

    @classmethod
    def from_vessel(cls, params: VesselParams) -> "PredicateParams":
        return cls(t_horizon=params.t_horizon,
                   t_horizon_check=params.t_horizon_check,
                   delta_head_on=params.delta_head_on,
                   speed_factor=params.speed_factor)


def disc_radius(params: VesselParams) -> float:
    """Enclosing-disc radius used by the velocity cone: (l + w) / 4."""
    return 0.25 * (params.length + params.width)


def relative_bearing(s_from: VesselState, s_to: VesselState) -> float:
    """Bearing of s_to as seen from s_from, relative to s_from's heading."""
    dx = s_to.x - s_from.x
    dy = s_to.y - s_from.y
    if dx == 0.0 and dy == 0.0:
        raise ValueError("relative bearing undefined for coincident vessels")
    return wrap_angle(math.atan2(dy, dx) - s_from.phi)


def in_front_sector(s_l: VesselState, s_m: VesselState, delta: float) -> bool:
    return abs(relative_bearing(s_l, s_m)) <= delta


def in_right_sector(s_l: VesselState, s_m: VesselState, delta: float,
                    side: float) -> bool:
    beta = relative_bearing(s_l, s_m)
    return -side < beta <= -delta


def in_left_sector(s_l: VesselState, s_m: VesselState, delta: float,
                   side: float) -> bool:
    beta = relative_bearing(s_l, s_m)
    return delta <= beta < side


def in_behind_sector(s_l: VesselState, s_m: VesselState, side: float) -> bool:
    """True when vessel m lies in vessel l's stern sector."""
    return abs(relative_bearing(s_l, s_m)) >= side


def orientation_within(s_l: VesselState, s_m: VesselState, delta: float,
                       ref: float) -> bool:
    """Headings differ from the reference offset by at most delta."""
    return abs(wrap_angle(s_m.phi - s_l.phi - ref)) <= delta


def orientation_towards_left(s_l: VesselState, s_m: VesselState,
                             delta: float) -> bool:
    """Vessel m's heading points to port relative to l's course."""
    rel = wrap_angle(s_m.phi - s_l.phi)
    return delta < rel < math.pi - delta


def orientation_towards_right(s_l: VesselState, s_m: VesselState,
                              delta: float) -> bool:
    """Vessel m's heading points to starboard relative to l's course."""
    rel = wrap_angle(s_m.phi - s_l.phi)
    return -math.pi + delta < rel < -delta


def sails_faster(s_l: VesselState, s_m: VesselState, factor: float) -> bool:
    return s_l.v >= factor * s_m.v


def collision_possible(s_l: VesselState, s_m: VesselState,
                       params_l: VesselParams, params_m: VesselParams,
                       t_horizon: float) -> bool:
    """Velocity-cone collision check within a time horizon.

    True when l's velocity lies inside the collision cone induced by m
    (constant velocities, disc footprints) and the relative speed is large
    enough to close the current gap within t_horizon. Overlapping discs
    count as collision_possible regardless of velocities.
    """
    rx = s_m.x - s_l.x
    ry = s_m.y - s_l.y
    dist = math.hypot(rx, ry)
    radius = disc_radius(params_l) + disc_radius(params_m)
    if dist <= radius:
        return True
    vx = s_l.v * math.cos(s_l.phi) - s_m.v * math.cos(s_m.phi)
    vy = s_l.v * math.sin(s_l.phi) - s_m.v * math.sin(s_m.phi)
    speed = math.hypot(vx, vy)
    if speed * t_horizon < dist:
        return False
    # ray from l along the relative velocity must pass within the disc
    closing = vx * rx + vy * ry
    if closing <= 0.0:
        return False
    miss = abs(vx * ry - vy * rx) / speed
    return miss <= radius


def head_on(s_l: VesselState, s_m: VesselState, params_l: VesselParams,
            params_m: VesselParams, pred: PredicateParams) -> bool:
    """Reciprocal-course encounter ahead; both vessels must give way."""
    return (collision_possible(s_l, s_m, params_l, params_m, pred.t_horizon)
            and in_front_sector(s_l, s_m, pred.delta_head_on)
            and orientation_within(s_l, s_m, pred.delta_head_on, math.pi))


def crossing(s_l: VesselState, s_m: VesselState, params_l: VesselParams,
             params_m: VesselParams, pred: PredicateParams) -> bool:
    """Vessel m crosses from starboard; l must give way.

    Excludes geometries where l approaches from m's stern sector, which are
    overtaking situations and take precedence.
    """
    return (collision_possible(s_l, s_m, params_l, params_m, pred.t_horizon)
            and in_right_sector(s_l, s_m, pred.delta_head_on, pred.side_sector)
            and orientation_towards_left(s_l, s_m, pred.delta_head_on)
            and not in_behind_sector(s_m, s_l, pred.side_sector))


def overtake(s_l: VesselState, s_m: VesselState, params_l: VesselParams,
             params_m: VesselParams, pred: PredicateParams,
             t_horizon: float | None = None) -> bool:
    """Vessel l comes up on m from its stern sector, notably faster."""
    if t_horizon is None:
        t_horizon = pred.t_horizon
    return (collision_possible(s_l, s_m, params_l, params_m, t_horizon)
            and in_behind_sector(s_m, s_l, pred.side_sector)
            and orientation_within(s_l, s_m, pred.overtake_band, 0.0)
            and sails_faster(s_l, s_m, pred.speed_factor))


def keep(s_l: VesselState, s_m: VesselState, params_l: VesselParams,
         params_m: VesselParams, pred: PredicateParams) -> bool:
    """Vessel l is stand-on: m crosses from port or overtakes l.

    Evaluated with the (usually longer) t_horizon_check so the stand-on
    duty is recognized at least as early as the give-way duty.
    """
    first = (collision_possible(s_l, s_m, params_l, params_m,
                                pred.t_horizon_check)
             and in_left_sector(s_l, s_m, pred.delta_head_on,
                                pred.side_sector)
             and orientation_towards_right(s_l, s_m, pred.delta_head_on))
    if first:
        return True
    return overtake(s_m, s_l, params_m, params_l, pred,
                    t_horizon=pred.t_horizon_check)


def classify(s_l: VesselState, s_m: VesselState, params_l: VesselParams,
             params_m: VesselParams,
             pred: PredicateParams | None = None) -> EncounterKind:
    """Encounter kind of vessel l with respect to vessel m.

    Give-way kinds are mutually exclusive by construction; two firing at
    once indicates a predicate regression and raises RuntimeError.
    """
    if pred is None:
        pred = PredicateParams.from_vessel(params_l)
    hits = []
    if head_on(s_l, s_m, params_l, params_m, pred):
        hits.append(EncounterKind.HEAD_ON_GIVE_WAY)
    if crossing(s_l, s_m, params_l, params_m, pred):
        hits.append(EncounterKind.CROSSING_GIVE_WAY)
    if overtake(s_l, s_m, params_l, params_m, pred):
        hits.append(EncounterKind.OVERTAKE_GIVE_WAY)
    if len(hits) > 1:
        raise RuntimeError(
            "give-way predicates must be mutually exclusive, got "
            + ", ".join(k.value for k in hits))
    if hits:
        return hits[0]
    if keep(s_l, s_m, params_l, params_m, pred):
        return EncounterKind.STAND_ON
    return EncounterKind.NONE
