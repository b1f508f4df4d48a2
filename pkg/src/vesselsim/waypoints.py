"""Rule-adaptive waypoint planning.

Each reactive vessel owns a WaypointEngine that keeps its waypoint plan,
watches other traffic with the encounter predicates, and on a persistent
classification replaces the plan with an avoidance maneuver. Maneuvers are
small phase machines; when the exit condition of the last phase fires, the
plan resumes with every original goal not yet reached.

Guiding waypoints are placed far beyond the planning horizon so only their
direction matters; normal waypoints are consumed on proximity.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import VesselParams, VesselState
from .geometry import Line2, in_h, intersect, rad2vec, vec2rad, wrap_angle
from .predicates import (EncounterKind, PredicateParams, classify,
                         collision_possible, keep)


class WaypointKind(Enum):
    NORMAL = "normal"
    GUIDING = "guiding"


@dataclass
class Waypoint:
    position: np.ndarray
    kind: WaypointKind = WaypointKind.NORMAL
    goal_index: int | None = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class WaypointPlan:
    """Active waypoint queue plus the original goal bookkeeping."""

    active: list[Waypoint]
    goals: list[np.ndarray]
    reached: list[bool]
    last_reached: np.ndarray

    @classmethod
    def from_goals(cls, start_position, goals) -> "WaypointPlan":
        goals = [np.asarray(g, dtype=float) for g in goals]
        if not goals:
            raise ValueError("a plan needs at least one goal waypoint")
        active = [Waypoint(g, WaypointKind.NORMAL, i)
                  for i, g in enumerate(goals)]
        return cls(active=active, goals=goals,
                   reached=[False] * len(goals),
                   last_reached=np.asarray(start_position, dtype=float))

    def all_reached(self) -> bool:
        return all(self.reached)


def make_guiding(position, direction: float, params: VesselParams) -> Waypoint:
    """Guiding waypoint d_guide ahead of position along direction.

    d_guide must exceed the distance reachable within one MPC horizon,
    otherwise the waypoint could be overrun and its direction lost.
    """
    reach = params.horizon * params.dt * params.v_max
    if params.d_guide <= reach:
        raise ValueError(
            f"d_guide {params.d_guide:g} must exceed horizon reach {reach:g}")
    pos = np.asarray(position, dtype=float) + params.d_guide * rad2vec(direction)
    return Waypoint(pos, WaypointKind.GUIDING)


def consume_waypoints(plan: WaypointPlan, state: VesselState,
                      params: VesselParams) -> WaypointPlan:
    """Pop leading normal waypoints within reach and mark reached goals.

    The final goal uses the tighter d_term radius, everything else d_wp.
    Guiding waypoints are never consumed.
    """
    while plan.active:
        wp = plan.active[0]
        if wp.kind is WaypointKind.GUIDING:
            break
        final_goal = wp.goal_index == len(plan.goals) - 1
        radius = params.d_term if final_goal else params.d_wp
        if float(np.hypot(*(state.position - wp.position))) > radius:
            break
        plan.active.pop(0)
        plan.last_reached = wp.position
        if wp.goal_index is not None:
            plan.reached[wp.goal_index] = True
    return plan


def resume_plan(plan: WaypointPlan) -> WaypointPlan:
    """Replace the active queue with all goals not yet reached."""
    plan.active = [Waypoint(g, WaypointKind.NORMAL, i)
                   for i, g in enumerate(plan.goals) if not plan.reached[i]]
    return plan


def stable_orientation(headings, p_from, p_to, params: VesselParams) -> bool:
    """True when the recent headings all align with the leg from p_from to p_to.

    Checks the trailing t_so window (false when fewer samples are available)
    against the leg course with tolerance alpha_so.
    """
    needed = max(1, int(round(params.t_so / params.dt)))
    if len(headings) < needed:
        return False
    course = vec2rad(p_to, p_from)
    recent = list(headings)[-needed:]
    return all(abs(wrap_angle(h - course)) <= params.alpha_so for h in recent)


@dataclass
class EncounterPhase:
    """Bookkeeping for one active avoidance maneuver."""

    kind: EncounterKind
    obstacle_id: object
    s_self0: VesselState
    s_obs0: VesselState
    stage: int = 1
    path_since_start: float = 0.0
    # leg anchor and waypoints referenced by the stage triggers
    leg_start: np.ndarray | None = None
    wp1: Waypoint | None = None
    wp2: Waypoint | None = None
    wp3: Waypoint | None = None


def plan_head_on(s_self: VesselState, s_obs: VesselState, obstacle_id,
                 params: VesselParams) -> tuple[list[Waypoint], EncounterPhase]:
    """Starboard evasion: one guiding waypoint alpha_h1 to the right."""
    w1 = make_guiding(s_self.position, s_self.phi - params.alpha_h1, params)
    phase = EncounterPhase(EncounterKind.HEAD_ON_GIVE_WAY, obstacle_id,
                           s_self.copy(), s_obs.copy(), wp1=w1)
    return [w1], phase


def plan_crossing(s_self: VesselState, s_obs: VesselState, obstacle_id,
                  params: VesselParams) -> tuple[list[Waypoint], EncounterPhase]:
    """Turn to pass astern of the crossing vessel.

    W_c1 sits d_c1 along beta_c: at least alpha_c1 to starboard, or straight
    at the obstacle's position when it bears even further right. W_c2 guides
    perpendicular to the original course until clear.
    """
    obs_dir = vec2rad(s_obs.position, s_self.position)
    rel = wrap_angle(obs_dir - s_self.phi)
    if rel > -params.alpha_c1:
        beta_c = wrap_angle(s_self.phi - params.alpha_c1)
    else:
        beta_c = obs_dir
    w1 = Waypoint(s_self.position + params.d_c1 * rad2vec(beta_c),
                  WaypointKind.NORMAL)
    w2 = make_guiding(w1.position, s_self.phi - 0.5 * math.pi, params)
    phase = EncounterPhase(EncounterKind.CROSSING_GIVE_WAY, obstacle_id,
                           s_self.copy(), s_obs.copy(), wp1=w1, wp2=w2)
    return [w1, w2], phase


def plan_overtake(s_self: VesselState, s_obs: VesselState, obstacle_id,
                  params: VesselParams) -> tuple[list[Waypoint], EncounterPhase]:
    """Swing out to the overtaking side and pass with clearance d_o1.

    Side: starboard unless the obstacle's heading points to starboard of
    ours, then port. W_o1 lies on the obstacle's beam line (g_2) where our
    alpha_o1 evasion ray (g_1) crosses it, pushed out to d_o1 clearance if
    that crossing is too close to the obstacle or behind us. W_o2 guides
    parallel to the original course.
    """
    rel = wrap_angle(s_obs.phi - s_self.phi)
    sign = -1.0 if rel >= 0.0 else 1.0   # -1: overtake on the right side
    g1 = Line2(s_self.position, s_self.phi + sign * params.alpha_o1)
    g2 = Line2(s_obs.position, s_obs.phi + sign * 0.5 * math.pi)
    side_dir = rad2vec(g2.direction)
    p_o = intersect(g2, g1)
    if not p_o.any():
        # parallel beam line: fall back to the plain evasion ray
        w1_pos = s_self.position + params.d_o1 * rad2vec(g1.direction)
    else:
        forward = float((p_o - s_self.position) @ rad2vec(g1.direction))
        outward = float((p_o - s_obs.position) @ side_dir)
        if forward > 0.0 and outward >= params.d_o1:
            w1_pos = p_o
        else:
            w1_pos = s_obs.position + params.d_o1 * side_dir
    w1 = Waypoint(w1_pos, WaypointKind.NORMAL)
    w2 = make_guiding(w1.position, s_self.phi, params)
    phase = EncounterPhase(EncounterKind.OVERTAKE_GIVE_WAY, obstacle_id,
                           s_self.copy(), s_obs.copy(), wp1=w1, wp2=w2)
    return [w1, w2], phase


def plan_stand_on(s_self: VesselState, s_obs: VesselState, obstacle_id,
                  params: VesselParams) -> tuple[list[Waypoint], EncounterPhase]:
    """Hold course and speed: one guiding waypoint dead ahead."""
    w1 = make_guiding(s_self.position, s_self.phi, params)
    phase = EncounterPhase(EncounterKind.STAND_ON, obstacle_id,
                           s_self.copy(), s_obs.copy(), wp1=w1)
    return [w1], phase


_PLANNERS = {
    EncounterKind.HEAD_ON_GIVE_WAY: plan_head_on,
    EncounterKind.CROSSING_GIVE_WAY: plan_crossing,
    EncounterKind.OVERTAKE_GIVE_WAY: plan_overtake,
    EncounterKind.STAND_ON: plan_stand_on,
}


class WaypointEngine:
    """Per-vessel plan keeper and encounter phase machine.

    update_waypoints must be called exactly once per simulation step, with
    the pre-step state snapshot, before the controller runs.
    """

    def __init__(self, vessel_id, params: VesselParams, goals,
                 initial_state: VesselState):
        self.vessel_id = vessel_id
        self.params = params
        self.pred = PredicateParams.from_vessel(params)
        self.plan = WaypointPlan.from_goals(initial_state.position, goals)
        self.phase: EncounterPhase | None = None
        self.finished = False
        self._react_steps = max(1, int(round(params.t_react / params.dt)))
        window = max(1, int(round(params.t_so / params.dt)))
        self._headings: deque[float] = deque(maxlen=window)
        self._prev_position: np.ndarray | None = None
        self._pending: dict[tuple, int] = {}
        self._keep_false_streak = 0

    @property
    def current_kind(self) -> EncounterKind:
        return self.phase.kind if self.phase is not None else EncounterKind.NONE

    def update_waypoints(self, s_self: VesselState, others) -> None:
        """Advance plan state; others is a list of (id, state, params)."""
        if self.finished:
            return
        pos = s_self.position
        self._headings.append(s_self.phi)
        if self.phase is not None and self._prev_position is not None:
            self.phase.path_since_start += float(
                np.hypot(*(pos - self._prev_position)))
        self._prev_position = pos

        consume_waypoints(self.plan, s_self, self.params)
        if self.plan.all_reached():
            self.finished = True
            self.phase = None
            return

        if self.phase is None:
            self._detect(s_self, others)
        else:
            self._advance(s_self, others)

    # -- encounter detection ------------------------------------------------

    def _detect(self, s_self: VesselState, others) -> None:
        seen: dict[tuple, int] = {}
        for other_id, s_other, params_other in others:
            kind = classify(s_self, s_other, self.params, params_other,
                            self.pred)
            if kind is EncounterKind.NONE:
                continue
            key = (other_id, kind)
            seen[key] = self._pending.get(key, 0) + 1
        self._pending = seen
        for (other_id, kind), count in seen.items():
            if count >= self._react_steps:
                self._lock(kind, other_id, s_self, others)
                return

    def _lock(self, kind: EncounterKind, obstacle_id, s_self: VesselState,
              others) -> None:
        s_obs = self._obstacle_state(obstacle_id, others)
        waypoints, phase = _PLANNERS[kind](s_self, s_obs, obstacle_id,
                                           self.params)
        self.plan.active = waypoints
        self.plan.last_reached = s_self.position
        self.phase = phase
        self.phase.leg_start = s_self.position
        self._pending = {}
        self._keep_false_streak = 0

    # -- phase machines -----------------------------------------------------

    def _advance(self, s_self: VesselState, others) -> None:
        phase = self.phase
        match = [(s, p) for oid, s, p in others if oid == phase.obstacle_id]
        if not match:
            # the locked vessel reached its goal and left the traffic
            self._terminate(s_self)
            return
        s_obs, params_obs = match[0]

        if phase.kind is EncounterKind.STAND_ON:
            if keep(s_self, s_obs, self.params, params_obs, self.pred):
                self._keep_false_streak = 0
            else:
                self._keep_false_streak += 1
                if self._keep_false_streak >= self._react_steps:
                    self._terminate(s_self)
            return

        if phase.kind is EncounterKind.HEAD_ON_GIVE_WAY:
            if phase.stage == 1:
                cleared = not collision_possible(
                    s_self, s_obs, self.params, params_obs,
                    self.pred.t_horizon)
                if cleared and phase.path_since_start >= self.params.d_h1:
                    parallel = vec2rad(phase.s_obs0.position,
                                       phase.s_self0.position)
                    phase.wp2 = make_guiding(s_self.position, parallel,
                                             self.params)
                    self._enter_leg(s_self, [phase.wp2])
                    phase.stage = 2
            elif (self._obstacle_behind(s_self, s_obs, self.params.d_h2)
                  and stable_orientation(self._headings, phase.leg_start,
                                         phase.wp2.position, self.params)):
                self._terminate(s_self)
            return

        if phase.kind is EncounterKind.CROSSING_GIVE_WAY:
            if phase.stage == 1:
                if (self._obstacle_behind(s_self, s_obs, self.params.d_c2)
                        and stable_orientation(self._headings,
                                               phase.wp1.position,
                                               phase.wp2.position,
                                               self.params)):
                    phase.wp3 = make_guiding(s_self.position,
                                             phase.s_self0.phi, self.params)
                    self._enter_leg(s_self, [phase.wp3])
                    phase.stage = 2
            elif (self._obstacle_behind(s_self, s_obs, self.params.d_c3)
                  and stable_orientation(self._headings, phase.leg_start,
                                         phase.wp3.position, self.params)):
                self._terminate(s_self)
            return

        if phase.kind is EncounterKind.OVERTAKE_GIVE_WAY:
            if (self._obstacle_behind(s_self, s_obs, self.params.d_o2)
                    and stable_orientation(self._headings,
                                           phase.wp1.position,
                                           phase.wp2.position, self.params)):
                self._terminate(s_self)
            return

    def _enter_leg(self, s_self: VesselState, waypoints) -> None:
        self.plan.active = list(waypoints)
        self.plan.last_reached = s_self.position
        self.phase.leg_start = s_self.position

    def _terminate(self, s_self: VesselState) -> None:
        resume_plan(self.plan)
        # the resumed leg starts here, not at the pre-encounter waypoint;
        # otherwise the reference line sits far abeam after the detour
        self.plan.last_reached = s_self.position
        self.phase = None
        self._pending = {}
        self._keep_false_streak = 0
        if not self.plan.active:
            self.finished = self.plan.all_reached()

    def _obstacle_behind(self, s_self: VesselState, s_obs: VesselState,
                         dist: float) -> bool:
        # halfspace through our own position, normal along our heading
        return in_h(s_obs.position - s_self.position, s_self.phi, -dist)

    @staticmethod
    def _obstacle_state(obstacle_id, others) -> VesselState:
        for other_id, s_other, _ in others:
            if other_id == obstacle_id:
                return s_other
        raise KeyError(f"locked obstacle {obstacle_id!r} missing from snapshot")

    @staticmethod
    def _obstacle_params(obstacle_id, others) -> VesselParams:
        for other_id, _, params_other in others:
            if other_id == obstacle_id:
                return params_other
        raise KeyError(f"locked obstacle {obstacle_id!r} missing from snapshot")
