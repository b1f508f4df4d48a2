"""Closed-loop multi-vessel simulation.

Every step works on the pre-step state snapshot: each reactive vessel
updates its waypoint plan, builds its reference, and solves its MPC; all
inputs are then applied simultaneously and pre-recorded obstacle vessels
advance along their trajectories (holding the final state once exhausted).
The run ends when every reactive vessel finished, any two footprints
overlap (collision, goals are no longer credited), or t_max is reached.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlInput, VesselParams, VesselState, step
from .mpc import mpc_step, shift_plan
from .predicates import EncounterKind
from .waypoints import WaypointEngine


@dataclass
class AgentSpec:
    """A reactive vessel: initial state plus its goal waypoint list."""

    vessel_id: str
    params: VesselParams
    state: VesselState
    goals: list

    def __post_init__(self):
        self.goals = [np.asarray(g, dtype=float) for g in self.goals]


@dataclass
class ObstacleSpec:
    """A non-reactive vessel replaying a recorded trajectory.

    trajectory rows are states [x, y, phi, v] sampled on the scenario time
    grid starting at t = 0.
    """

    vessel_id: str
    params: VesselParams
    trajectory: np.ndarray

    def __post_init__(self):
        self.trajectory = np.asarray(self.trajectory, dtype=float)
        if self.trajectory.ndim != 2 or self.trajectory.shape[1] != 4:
            raise ValueError("obstacle trajectory must be (K, 4) states")
        if len(self.trajectory) == 0:
            raise ValueError("obstacle trajectory must not be empty")

    def state_at(self, k: int) -> VesselState:
        row = self.trajectory[min(k, len(self.trajectory) - 1)]
        return VesselState.from_array(row)


@dataclass
class Scenario:
    name: str
    agents: list[AgentSpec]
    obstacles: list[ObstacleSpec] = field(default_factory=list)
    dt: float = 1.0
    t_max: int = 1800
    seed: int | None = None

    def validate(self) -> None:
        if not self.agents:
            raise ValueError("scenario needs at least one reactive vessel")
        if self.dt <= 0 or self.t_max < 1:
            raise ValueError("dt must be positive and t_max at least 1")
        ids = [v.vessel_id for v in self.agents + self.obstacles]
        if len(set(ids)) != len(ids):
            raise ValueError("vessel ids must be unique")
        for agent in self.agents:
            if not agent.goals:
                raise ValueError(f"{agent.vessel_id} has no goal waypoint")
            if agent.params.dt != self.dt:
                raise ValueError(
                    f"{agent.vessel_id} params.dt differs from scenario dt")
        everyone = [(a.vessel_id, a.state, a.params) for a in self.agents]
        everyone += [(o.vessel_id, o.state_at(0), o.params)
                     for o in self.obstacles]
        for i in range(len(everyone)):
            for j in range(i + 1, len(everyone)):
                if check_collision(everyone[i][1], everyone[i][2],
                                   everyone[j][1], everyone[j][2]):
                    raise ValueError(
                        f"initial overlap between {everyone[i][0]} "
                        f"and {everyone[j][0]}")


def _rect_corners(state: VesselState, params: VesselParams,
                  margin: float) -> np.ndarray:
    hl = 0.5 * params.length + margin
    hw = 0.5 * params.width + margin
    c = math.cos(state.phi)
    s = math.sin(state.phi)
    ex = np.array([c, s])
    ey = np.array([-s, c])
    center = state.position
    return np.array([center + hl * ex + hw * ey,
                     center + hl * ex - hw * ey,
                     center - hl * ex - hw * ey,
                     center - hl * ex + hw * ey])


def check_collision(s_a: VesselState, params_a: VesselParams,
                    s_b: VesselState, params_b: VesselParams,
                    margin: float = 0.0) -> bool:
    """Oriented-rectangle overlap via the separating axis theorem.

    Touching counts as overlap. margin inflates both footprints.
    """
    # cheap enclosing-circle reject
    ra = math.hypot(0.5 * params_a.length + margin,
                    0.5 * params_a.width + margin)
    rb = math.hypot(0.5 * params_b.length + margin,
                    0.5 * params_b.width + margin)
    if math.hypot(s_b.x - s_a.x, s_b.y - s_a.y) > ra + rb:
        return False
    ca = _rect_corners(s_a, params_a, margin)
    cb = _rect_corners(s_b, params_b, margin)
    for phi in (s_a.phi, s_a.phi + 0.5 * math.pi,
                s_b.phi, s_b.phi + 0.5 * math.pi):
        axis = np.array([math.cos(phi), math.sin(phi)])
        pa = ca @ axis
        pb = cb @ axis
        if pa.max() < pb.min() or pb.max() < pa.min():
            return False
    return True


@dataclass
class VesselTrack:
    """Recorded run data for one vessel on the scenario time grid.

    states has one more row than the per-step arrays (the terminal state).
    Reference and waypoint columns are NaN where no controller ran.
    """

    vessel_id: str
    is_agent: bool
    params: VesselParams
    states: np.ndarray           # (K+1, 4)
    inputs: np.ndarray           # (K, 2)
    kinds: list[str]             # length K
    refs: np.ndarray             # (K, 2) tracked reference head
    next_wp: np.ndarray          # (K, 2)
    plan_events: list = field(default_factory=list)


@dataclass
class Trajectory:
    dt: float
    tracks: list[VesselTrack]

    def agent_tracks(self) -> list[VesselTrack]:
        return [t for t in self.tracks if t.is_agent]


@dataclass
class RunResult:
    goal_reached: dict
    collision: bool
    collision_pair: tuple | None
    collision_step: int | None
    steps: int
    mpc_time: float
    waypoint_time: float
    solver_failures: int

    @property
    def all_goals_reached(self) -> bool:
        return all(self.goal_reached.values())


def _plan_signature(plan):
    return tuple((round(float(w.position[0]), 6), round(float(w.position[1]), 6),
                  w.kind.value) for w in plan.active)


def run(scenario: Scenario) -> tuple[Trajectory, RunResult]:
    """Simulate a scenario to termination. Deterministic for fixed input."""
    scenario.validate()
    dt = scenario.dt
    agents = scenario.agents
    obstacles = scenario.obstacles

    engines = {a.vessel_id: WaypointEngine(a.vessel_id, a.params, a.goals,
                                           a.state)
               for a in agents}
    states = {a.vessel_id: a.state.copy() for a in agents}
    u_prev = {a.vessel_id: ControlInput() for a in agents}

    rec = {a.vessel_id: dict(states=[], inputs=[], kinds=[], refs=[],
                             next_wp=[], plan_events=[], plan_sig=None)
           for a in agents}
    rec_obs = {o.vessel_id: dict(states=[]) for o in obstacles}

    mpc_time = 0.0
    wp_time = 0.0
    warm = {a.vessel_id: None for a in agents}
    solver_failures = 0
    collision = False
    collision_pair = None
    collision_step = None
    steps = 0

    for k in range(scenario.t_max):
        # arrived vessels leave the traffic picture: they are neither
        # perceived by the others nor part of the collision check
        snapshot = [(a.vessel_id, states[a.vessel_id], a.params)
                    for a in agents if not engines[a.vessel_id].finished]
        snapshot += [(o.vessel_id, o.state_at(k), o.params)
                     for o in obstacles]

        controls = {}
        for a in agents:
            vid = a.vessel_id
            engine = engines[vid]
            s = states[vid]
            r = rec[vid]
            r["states"].append(s.as_array())
            if engine.finished:
                r["inputs"].append((0.0, 0.0))
                r["kinds"].append(EncounterKind.NONE.value)
                r["refs"].append((np.nan, np.nan))
                r["next_wp"].append((np.nan, np.nan))
                continue
            others = [entry for entry in snapshot if entry[0] != vid]
            t0 = time.perf_counter()
            engine.update_waypoints(s, others)
            t1 = time.perf_counter()
            wp_time += t1 - t0
            sig = _plan_signature(engine.plan)
            if sig != r["plan_sig"]:
                r["plan_sig"] = sig
                r["plan_events"].append(
                    (k, [(float(w.position[0]), float(w.position[1]),
                          w.kind.value) for w in engine.plan.active]))
            r["kinds"].append(engine.current_kind.value)
            if engine.finished:
                r["inputs"].append((0.0, 0.0))
                r["refs"].append((np.nan, np.nan))
                r["next_wp"].append((np.nan, np.nan))
                continue
            u, info = mpc_step(s, u_prev[vid], engine.plan, a.params,
                               warm_start=warm[vid])
            mpc_time += time.perf_counter() - t1
            warm[vid] = shift_plan(info.inputs)
            if info.status != "optimal":
                solver_failures += 1
            controls[vid] = u
            r["inputs"].append((u.a, u.omega))
            r["refs"].append(tuple(info.reference.positions[0]))
            wp = engine.plan.active[0].position
            r["next_wp"].append((float(wp[0]), float(wp[1])))

        for o in obstacles:
            rec_obs[o.vessel_id]["states"].append(o.state_at(k).as_array())

        for vid, u in controls.items():
            a = next(x for x in agents if x.vessel_id == vid)
            states[vid] = step(states[vid], u, dt, a.params)
            u_prev[vid] = u
        steps = k + 1

        # collision check on the post-step states (active vessels only)
        poses = [(a.vessel_id, states[a.vessel_id], a.params)
                 for a in agents if not engines[a.vessel_id].finished]
        poses += [(o.vessel_id, o.state_at(k + 1), o.params)
                  for o in obstacles]
        for i in range(len(poses)):
            for j in range(i + 1, len(poses)):
                if check_collision(poses[i][1], poses[i][2],
                                   poses[j][1], poses[j][2]):
                    collision = True
                    collision_pair = (poses[i][0], poses[j][0])
                    collision_step = steps
                    break
            if collision:
                break
        if collision:
            break
        if all(engines[a.vessel_id].finished for a in agents):
            break

    tracks = []
    for a in agents:
        vid = a.vessel_id
        r = rec[vid]
        r["states"].append(states[vid].as_array())
        tracks.append(VesselTrack(
            vessel_id=vid, is_agent=True, params=a.params,
            states=np.asarray(r["states"]),
            inputs=np.asarray(r["inputs"], dtype=float),
            kinds=r["kinds"],
            refs=np.asarray(r["refs"], dtype=float),
            next_wp=np.asarray(r["next_wp"], dtype=float),
            plan_events=r["plan_events"]))
    for o in obstacles:
        hist = rec_obs[o.vessel_id]["states"]
        hist.append(o.state_at(steps).as_array())
        n = len(hist) - 1
        tracks.append(VesselTrack(
            vessel_id=o.vessel_id, is_agent=False, params=o.params,
            states=np.asarray(hist),
            inputs=np.zeros((n, 2)),
            kinds=[EncounterKind.NONE.value] * n,
            refs=np.full((n, 2), np.nan),
            next_wp=np.full((n, 2), np.nan),
            plan_events=[]))

    # a collision freezes the run, so only goals reached before it are marked
    goal_reached = {a.vessel_id: engines[a.vessel_id].plan.all_reached()
                    for a in agents}

    result = RunResult(goal_reached=goal_reached, collision=collision,
                       collision_pair=collision_pair,
                       collision_step=collision_step, steps=steps,
                       mpc_time=mpc_time, waypoint_time=wp_time,
                       solver_failures=solver_failures)
    return Trajectory(dt=dt, tracks=tracks), result


def runtime_profile(max_vessels: int = 6, steps: int = 120,
                    params_factory=None, radius: float = 2000.0) -> list[dict]:
    """Per-step wall-time split for 1..max_vessels converging vessels.

    Vessels start on a circle and head for diametrically opposite goals,
    so encounters fire while nobody reaches a goal within the step budget.
    """
    from .dynamics import container_ship

    if params_factory is None:
        params_factory = container_ship
    rows = []
    for count in range(1, max_vessels + 1):
        agents = []
        for i in range(count):
            angle = 2.0 * math.pi * i / count + 0.15
            pos = radius * np.array([math.cos(angle), math.sin(angle)])
            goal = -3.0 * pos
            params = params_factory()
            heading = math.atan2(goal[1] - pos[1], goal[0] - pos[0])
            agents.append(AgentSpec(
                vessel_id=f"v{i}", params=params,
                state=VesselState(pos[0], pos[1], heading, params.v_des),
                goals=[goal]))
        scenario = Scenario(name=f"profile_{count}", agents=agents,
                            dt=agents[0].params.dt, t_max=steps)
        t0 = time.perf_counter()
        _, result = run(scenario)
        total = time.perf_counter() - t0
        rows.append(dict(vessels=count,
                         steps=result.steps,
                         step_time=total / result.steps,
                         mpc_time=result.mpc_time / result.steps,
                         waypoint_time=result.waypoint_time / result.steps))
    return rows
