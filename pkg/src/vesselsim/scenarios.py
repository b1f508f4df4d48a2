"""Scenario files, critical-traffic generation, and trajectory export.

Scenario files are versioned JSON and round-trip losslessly. Generated
scenarios place two vessels on straight initial-to-goal segments that
intersect with near-simultaneous arrival, so that non-reactive replay
provably ends in a collision or near miss (the criticality certificate).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import VESSEL_TYPES, VesselParams, VesselState
from .geometry import rad2vec, wrap_angle
from .predicates import disc_radius
from .simulator import AgentSpec, ObstacleSpec, Scenario, Trajectory, VesselTrack

SCHEMA_VERSION = 1

MIXES = ("head_on", "crossing", "overtake", "random")


# -- scenario files ---------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "dt": scenario.dt,
        "t_max": scenario.t_max,
        "seed": scenario.seed,
        "agents": [
            {
                "vessel_id": a.vessel_id,
                "params": a.params.to_dict(),
                "state": [float(x) for x in a.state.as_array()],
                "goals": [[float(g[0]), float(g[1])] for g in a.goals],
            }
            for a in scenario.agents
        ],
        "obstacles": [
            {
                "vessel_id": o.vessel_id,
                "params": o.params.to_dict(),
                "trajectory": [[float(x) for x in row]
                               for row in o.trajectory],
            }
            for o in scenario.obstacles
        ],
    }


def scenario_from_dict(data: dict) -> Scenario:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported scenario schema version: {version!r}")
    try:
        agents = [AgentSpec(vessel_id=a["vessel_id"],
                            params=VesselParams.from_dict(a["params"]),
                            state=VesselState.from_array(a["state"]),
                            goals=a["goals"])
                  for a in data["agents"]]
        obstacles = [ObstacleSpec(vessel_id=o["vessel_id"],
                                  params=VesselParams.from_dict(o["params"]),
                                  trajectory=o["trajectory"])
                     for o in data.get("obstacles", [])]
        return Scenario(name=data["name"], agents=agents, obstacles=obstacles,
                        dt=float(data["dt"]), t_max=int(data["t_max"]),
                        seed=data.get("seed"))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scenario file: {exc}") from exc


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1))


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_dict(data)


# -- critical scenario generation -------------------------------------------

@dataclass
class GeneratorConfig:
    count: int = 100
    seed: int = 0
    mix: str = "random"
    vessel_type: str = "type1"
    arrival_window: float = 60.0       # max arrival-time offset, s
    min_separation: float = 2000.0     # initial vessel separation bounds, m
    max_separation: float = 6000.0
    speed_jitter: float = 0.2          # initial speed spread around v_des
    goal_beyond: tuple = (1000.0, 2500.0)  # goal distance past the crossing

    def __post_init__(self):
        if self.mix not in MIXES:
            raise ValueError(f"mix must be one of {MIXES}, got {self.mix!r}")
        if self.vessel_type not in VESSEL_TYPES:
            raise ValueError(f"unknown vessel type {self.vessel_type!r}")
        if self.count < 1:
            raise ValueError("count must be positive")


def near_miss_threshold(params_a: VesselParams, params_b: VesselParams) -> float:
    """Certificate radius: 1.5x the combined disc radius of the pair."""
    return 1.5 * (disc_radius(params_a) + disc_radius(params_b))


def straight_replay_min_distance(scenario: Scenario) -> float:
    """Closest approach if both vessels sail straight at v_des, no reaction."""
    specs = list(scenario.agents) + list(scenario.obstacles)
    if len(specs) != 2:
        raise ValueError("certificate replay expects exactly two vessels")
    t = np.arange(scenario.t_max + 1) * scenario.dt
    tracks = []
    for spec in specs:
        if isinstance(spec, AgentSpec):
            s0 = spec.state
        else:
            s0 = spec.state_at(0)
        vel = spec.params.v_des * rad2vec(s0.phi)
        tracks.append(s0.position + t[:, None] * vel)
    return float(np.min(np.linalg.norm(tracks[0] - tracks[1], axis=1)))


def _cpa_for_offset(d0, v0, u0, v1, u1, aim_point, t_arrive0, dt_off):
    """Closest approach of two constant-velocity points, arrival offset dt_off."""
    q0 = -d0 * u0
    q1 = aim_point - v1 * (t_arrive0 + dt_off) * u1
    r0 = q0 - q1
    vr = v0 * u0 - v1 * u1
    vv = float(vr @ vr)
    if vv == 0.0:
        return float(np.hypot(*r0))
    t_star = max(-float(r0 @ vr) / vv, 0.0)
    return float(np.hypot(*(r0 + t_star * vr)))


def _max_certified_offset(cpa, limit, target):
    """Largest arrival offset in [0, limit] keeping the CPA under target."""
    if cpa(limit) <= target:
        return limit
    lo, hi = 0.0, limit
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if cpa(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def _jittered_speed(rng, params: VesselParams, jitter: float) -> float:
    v = params.v_des * (1.0 + jitter * rng.uniform(-1.0, 1.0))
    return min(max(v, 0.1), params.v_max)


def generate_critical(config: GeneratorConfig) -> list[Scenario]:
    """Deterministically generate near-collision two-vessel scenarios.

    Every emitted scenario passes the criticality certificate: replaying
    both vessels as straight-liners at v_des comes closer than
    near_miss_threshold.
    """
    rng = np.random.default_rng(config.seed)
    factory = VESSEL_TYPES[config.vessel_type]
    builders = {"head_on": _build_head_on, "crossing": _build_crossing,
                "overtake": _build_overtake}
    scenarios = []
    for index in range(config.count):
        if config.mix == "random":
            kind = ("head_on", "crossing", "overtake")[
                int(rng.integers(0, 3))]
        else:
            kind = config.mix
        for _ in range(200):
            scenario = builders[kind](rng, config, factory, index, kind)
            if scenario is None:
                continue
            threshold = near_miss_threshold(scenario.agents[0].params,
                                            scenario.agents[1].params)
            if straight_replay_min_distance(scenario) < threshold:
                break
        else:
            raise RuntimeError(f"could not certify a {kind} scenario")
        scenarios.append(scenario)
    return scenarios


def _assemble(config, index, kind, factory_params, states, goals, seed_note):
    (pars0, pars1) = factory_params
    path0 = np.hypot(*(goals[0] - states[0].position))
    path1 = np.hypot(*(goals[1] - states[1].position))
    t_max = int(1.8 * max(path0 / pars0.v_des, path1 / pars1.v_des) + 500)
    agents = [AgentSpec("v0", pars0, states[0], [goals[0]]),
              AgentSpec("v1", pars1, states[1], [goals[1]])]
    scenario = Scenario(name=f"{kind}-{index:03d}", agents=agents,
                        dt=pars0.dt, t_max=t_max, seed=seed_note)
    separation = float(np.hypot(*(states[0].position - states[1].position)))
    if not config.min_separation <= separation <= config.max_separation:
        return None
    return scenario


def _build_head_on(rng, config, factory, index, kind):
    pars0, pars1 = factory(), factory()
    v0, v1 = pars0.v_des, pars1.v_des
    theta0 = rng.uniform(-math.pi, math.pi)
    eta = rng.uniform(-0.05, 0.05)
    theta1 = wrap_angle(theta0 + math.pi + eta)
    u0, u1 = rad2vec(theta0), rad2vec(theta1)
    t_arrive0 = rng.uniform(160.0, 360.0)
    dt_off = rng.uniform(-config.arrival_window, config.arrival_window)
    lateral = rng.uniform(-40.0, 40.0)
    aim = lateral * np.array([-u0[1], u0[0]])
    d0 = v0 * t_arrive0
    q0 = -d0 * u0
    q1 = aim - v1 * (t_arrive0 + dt_off) * u1
    e0 = rng.uniform(*config.goal_beyond)
    e1 = rng.uniform(*config.goal_beyond)
    states = (VesselState(q0[0], q0[1], theta0,
                          _jittered_speed(rng, pars0, config.speed_jitter)),
              VesselState(q1[0], q1[1], theta1,
                          _jittered_speed(rng, pars1, config.speed_jitter)))
    goals = (e0 * u0, aim + e1 * u1)
    return _assemble(config, index, kind, (pars0, pars1), states, goals,
                     config.seed)


def _build_crossing(rng, config, factory, index, kind):
    """Vessel v1 crosses v0's course from starboard; v0 must give way."""
    pars0, pars1 = factory(), factory()
    v0, v1 = pars0.v_des, pars1.v_des
    theta0 = rng.uniform(-math.pi, math.pi)
    gamma = rng.uniform(math.radians(35.0), math.radians(100.0))
    theta1 = wrap_angle(theta0 + gamma)
    u0, u1 = rad2vec(theta0), rad2vec(theta1)
    t_arrive0 = rng.uniform(220.0, 480.0)
    d0 = v0 * t_arrive0
    # aim inside the conflict-detection radius, not just the (wider)
    # near-miss bound, so the replayed CPA is guaranteed to trigger a response
    target = 0.9 * (disc_radius(pars0) + disc_radius(pars1))
    cpa = lambda off: _cpa_for_offset(d0, v0, u0, v1, u1, np.zeros(2),
                                      t_arrive0, off)
    bound = _max_certified_offset(lambda off: max(cpa(off), cpa(-off)),
                                  config.arrival_window, target)
    dt_off = rng.uniform(-bound, bound)
    q0 = -d0 * u0
    q1 = -v1 * (t_arrive0 + dt_off) * u1
    if t_arrive0 + dt_off <= 60.0:
        return None
    # v1 must start in v0's starboard sector
    bearing = wrap_angle(math.atan2(q1[1] - q0[1], q1[0] - q0[0]) - theta0)
    if not -math.radians(100.0) < bearing < -math.radians(15.0):
        return None
    e0 = rng.uniform(*config.goal_beyond)
    e1 = rng.uniform(*config.goal_beyond)
    states = (VesselState(q0[0], q0[1], theta0,
                          _jittered_speed(rng, pars0, config.speed_jitter)),
              VesselState(q1[0], q1[1], theta1,
                          _jittered_speed(rng, pars1, config.speed_jitter)))
    goals = (e0 * u0, e1 * u1)
    return _assemble(config, index, kind, (pars0, pars1), states, goals,
                     config.seed)


def _build_overtake(rng, config, factory, index, kind):
    """Vessel v0 comes up on a slower v1 from astern; v0 must give way."""
    pars0 = factory()
    slow = pars0.v_des * rng.uniform(0.45, 0.65)
    pars1 = factory(v_des=slow)
    v0, v1 = pars0.v_des, pars1.v_des
    theta0 = rng.uniform(-math.pi, math.pi)
    gamma = rng.uniform(-0.15, 0.15)
    theta1 = wrap_angle(theta0 + gamma)
    u0, u1 = rad2vec(theta0), rad2vec(theta1)
    sep_target = rng.uniform(config.min_separation,
                             config.min_separation + 600.0)
    target = 0.9 * (disc_radius(pars0) + disc_radius(pars1))

    def cpa(off):
        t0 = (sep_target + v1 * off) / (v0 - v1)
        if t0 <= 0:
            return math.inf
        return _cpa_for_offset(v0 * t0, v0, u0, v1, u1, np.zeros(2), t0, off)

    bound = _max_certified_offset(lambda off: max(cpa(off), cpa(-off)),
                                  config.arrival_window, target)
    dt_off = rng.uniform(-bound, bound)
    t_arrive0 = (sep_target + v1 * dt_off) / (v0 - v1)
    if not 60.0 < t_arrive0 < 1800.0:
        return None
    d0 = v0 * t_arrive0
    d1 = v1 * (t_arrive0 + dt_off)
    if d1 <= 0:
        return None
    q0 = -d0 * u0
    q1 = -d1 * u1
    # v0 must start in v1's stern sector
    bearing = wrap_angle(math.atan2(q0[1] - q1[1], q0[0] - q1[0]) - theta1)
    if abs(bearing) < math.radians(120.0):
        return None
    # the chase at closing speed v0-v1 carries v0 well past the meeting
    # point; its goal has to sit beyond that footprint or the resumed leg
    # points backwards into the turn circle
    chase = v0 * (pars0.d_o1 + pars0.d_o2) / (v0 - v1)
    e0 = chase + rng.uniform(*config.goal_beyond)
    e1 = rng.uniform(*config.goal_beyond)
    states = (VesselState(q0[0], q0[1], theta0,
                          _jittered_speed(rng, pars0, config.speed_jitter)),
              VesselState(q1[0], q1[1], theta1,
                          _jittered_speed(rng, pars1, config.speed_jitter)))
    goals = (e0 * u0, e1 * u1)
    return _assemble(config, index, kind, (pars0, pars1), states, goals,
                     config.seed)


# -- mixed traffic ----------------------------------------------------------

def to_mixed(scenario: Scenario, obstacle_index: int = 1) -> Scenario:
    """Replay one agent as a non-reactive obstacle (straight line at v_des).

    The converted vessel sails from its initial position to its goal and
    then holds position there, exactly as a recorded trajectory would.
    """
    if not 0 <= obstacle_index < len(scenario.agents):
        raise ValueError("obstacle_index out of range")
    spec = scenario.agents[obstacle_index]
    agents = [a for i, a in enumerate(scenario.agents) if i != obstacle_index]
    goal = spec.goals[-1]
    start = spec.state.position
    dist = float(np.hypot(*(goal - start)))
    u = (goal - start) / dist if dist > 0 else rad2vec(spec.state.phi)
    heading = math.atan2(u[1], u[0])
    v = spec.params.v_des
    t = np.arange(scenario.t_max + 1) * scenario.dt
    travelled = np.minimum(t * v, dist)
    states = np.column_stack([
        start[0] + travelled * u[0],
        start[1] + travelled * u[1],
        np.full_like(t, heading),
        np.where(travelled < dist, v, 0.0),
    ])
    obstacle = ObstacleSpec(spec.vessel_id, spec.params, states)
    return Scenario(name=scenario.name + "-mixed", agents=agents,
                    obstacles=list(scenario.obstacles) + [obstacle],
                    dt=scenario.dt, t_max=scenario.t_max,
                    seed=scenario.seed)


def adversarial_stand_on_scenario(vessel_type: str = "type1") -> Scenario:
    """Stand-on agent held on course while a non-reactive crosser from port
    refuses to give way: ends in a collision by construction."""
    params = VESSEL_TYPES[vessel_type]()
    v = params.v_des
    d = 2500.0
    t_hit = d / v
    agent = AgentSpec("v0", params, VesselState(-d, 0.0, 0.0, v),
                      goals=[np.array([2000.0, 0.0])])
    obs_params = VESSEL_TYPES[vessel_type]()
    heading = -math.pi / 3.0
    u = rad2vec(heading)
    q = -t_hit * v * u
    t_max = int(t_hit * 2.5)
    t = np.arange(t_max + 1) * params.dt
    states = np.column_stack([
        q[0] + t * v * u[0],
        q[1] + t * v * u[1],
        np.full_like(t, heading),
        np.full_like(t, v),
    ])
    return Scenario(name=f"adversarial-stand-on-{vessel_type}",
                    agents=[agent],
                    obstacles=[ObstacleSpec("obs", obs_params, states)],
                    dt=params.dt, t_max=t_max, seed=None)


# -- trajectory export / import ---------------------------------------------

EXPORT_COLUMNS = [
    "time_s", "vessel_id", "x_m", "y_m", "heading_rad", "speed_mps",
    "accel_mps2", "yaw_rate_radps", "encounter",
    "next_wp_x_m", "next_wp_y_m", "ref_x_m", "ref_y_m",
]


def export_trajectory(trajectory: Trajectory, path,
                      waypoint_path=None) -> None:
    """Write one row per vessel per step, full float precision.

    A companion file (default: <path stem>_waypoints.csv) logs the active
    waypoint plan whenever it changes, for plotting planned paths.
    """
    path = Path(path)
    steps = min(len(t.inputs) for t in trajectory.tracks)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EXPORT_COLUMNS)
        for k in range(steps):
            t_s = k * trajectory.dt
            for track in trajectory.tracks:
                s = track.states[k]
                u = track.inputs[k]
                wp = track.next_wp[k]
                ref = track.refs[k]
                writer.writerow([repr(float(t_s)), track.vessel_id,
                                 repr(float(s[0])), repr(float(s[1])),
                                 repr(float(s[2])), repr(float(s[3])),
                                 repr(float(u[0])), repr(float(u[1])),
                                 track.kinds[k],
                                 repr(float(wp[0])), repr(float(wp[1])),
                                 repr(float(ref[0])), repr(float(ref[1]))])
    if waypoint_path is None:
        waypoint_path = path.with_name(path.stem + "_waypoints.csv")
    with Path(waypoint_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vessel_id", "step", "wp_index", "x_m", "y_m",
                         "kind"])
        for track in trajectory.tracks:
            for step_index, plan in track.plan_events:
                for wp_index, (x, y, kind) in enumerate(plan):
                    writer.writerow([track.vessel_id, step_index, wp_index,
                                     repr(float(x)), repr(float(y)), kind])


_IMPORT_ALIASES = {
    "time_s": "time", "time": "time", "t": "time",
    "vessel_id": "vessel_id", "vessel": "vessel_id", "id": "vessel_id",
    "x_m": "x", "x": "x",
    "y_m": "y", "y": "y",
    "heading_rad": "phi", "heading": "phi", "phi": "phi",
    "speed_mps": "v", "speed": "v", "v": "v",
    "accel_mps2": "a", "yaw_rate_radps": "omega",
    "encounter": "encounter",
    "next_wp_x_m": None, "next_wp_y_m": None,
    "ref_x_m": "ref_x", "ref_y_m": "ref_y",
}


def import_trajectory(path, params: VesselParams) -> Trajectory:
    """Read timed (x, y, heading, speed) rows into a Trajectory.

    Accepts the export format or any delimited file with recognizable
    column names; every vessel gets the supplied params. One-way: plan
    events and encounter annotations are not reconstructed.
    """
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty trajectory file")
        fields = {}
        for name in reader.fieldnames:
            alias = _IMPORT_ALIASES.get(name.strip().lower())
            if alias:
                fields[alias] = name
        for needed in ("time", "x", "y", "phi", "v"):
            if needed not in fields:
                raise ValueError(f"{path}: missing column for {needed!r}")
        for row in reader:
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")

    by_vessel: dict = {}
    for row in rows:
        vid = row[fields["vessel_id"]] if "vessel_id" in fields else "v0"
        by_vessel.setdefault(vid, []).append(row)

    tracks = []
    dt = None
    for vid, vrows in by_vessel.items():
        vrows.sort(key=lambda r: float(r[fields["time"]]))
        times = np.array([float(r[fields["time"]]) for r in vrows])
        if len(times) > 1:
            steps = np.diff(times)
            if np.ptp(steps) > 1e-9 or steps[0] <= 0:
                raise ValueError(f"{path}: non-uniform time grid for {vid}")
            dt = float(steps[0]) if dt is None else dt
        states = np.column_stack([
            [float(r[fields["x"]]) for r in vrows],
            [float(r[fields["y"]]) for r in vrows],
            [float(r[fields["phi"]]) for r in vrows],
            [float(r[fields["v"]]) for r in vrows],
        ])
        n = max(len(states) - 1, 0)
        if "a" in fields and "omega" in fields:
            inputs = np.column_stack([
                [float(r[fields["a"]]) for r in vrows[:n]],
                [float(r[fields["omega"]]) for r in vrows[:n]],
            ]) if n else np.zeros((0, 2))
        else:
            inputs = np.zeros((n, 2))
        if "ref_x" in fields and "ref_y" in fields:
            refs = np.column_stack([
                [float(r[fields["ref_x"]]) for r in vrows[:n]],
                [float(r[fields["ref_y"]]) for r in vrows[:n]],
            ]) if n else np.zeros((0, 2))
        else:
            refs = np.full((n, 2), np.nan)
        kinds = [r[fields["encounter"]] if "encounter" in fields else "none"
                 for r in vrows[:n]]
        tracks.append(VesselTrack(vessel_id=vid, is_agent=True,
                                  params=params, states=states,
                                  inputs=inputs, kinds=kinds, refs=refs,
                                  next_wp=np.full((n, 2), np.nan)))
    return Trajectory(dt=dt if dt is not None else params.dt, tracks=tracks)
