"""Maritime traffic simulation with COLREGS-reactive vessels.

Vessels follow waypoint plans with a linearized tracking MPC; encounters
classified by formal predicates trigger rule-specific replanning. Includes
an offline rule-compliance monitor, a critical-scenario generator, and a
batch harness with figure output.
"""

__version__ = "0.1.0"

from .dynamics import (ControlInput, VESSEL_TYPES, VesselParams, VesselState,
                       container_ship, linearize_discretize, step, tanker)
from .predicates import (EncounterKind, PredicateParams, classify,
                         collision_possible, crossing, head_on, keep,
                         overtake)
from .waypoints import (Waypoint, WaypointEngine, WaypointKind, WaypointPlan,
                        make_guiding)
from .mpc import MpcInfo, build_qp, get_reference, mpc_step, shift_plan, solve_qp
from .simulator import (AgentSpec, ObstacleSpec, RunResult, Scenario,
                        Trajectory, VesselTrack, check_collision, run,
                        runtime_profile)
from .compliance import (ComplianceReport, Moments, RuleParams, check_rules,
                         tracking_stats)
from .scenarios import (GeneratorConfig, adversarial_stand_on_scenario,
                        export_trajectory, generate_critical,
                        import_trajectory, load_scenario,
                        near_miss_threshold, save_scenario,
                        straight_replay_min_distance, to_mixed)
from .batch import BatchSummary, batch_run, run_record, summarize

__all__ = [
    "__version__",
    "ControlInput", "VESSEL_TYPES", "VesselParams", "VesselState",
    "container_ship", "linearize_discretize", "step", "tanker",
    "EncounterKind", "PredicateParams", "classify", "collision_possible",
    "crossing", "head_on", "keep", "overtake",
    "Waypoint", "WaypointEngine", "WaypointKind", "WaypointPlan",
    "make_guiding",
    "MpcInfo", "build_qp", "get_reference", "mpc_step", "shift_plan", "solve_qp",
    "AgentSpec", "ObstacleSpec", "RunResult", "Scenario", "Trajectory",
    "VesselTrack", "check_collision", "run", "runtime_profile",
    "ComplianceReport", "Moments", "RuleParams", "check_rules",
    "tracking_stats",
    "GeneratorConfig", "adversarial_stand_on_scenario", "export_trajectory",
    "generate_critical", "import_trajectory", "load_scenario",
    "near_miss_threshold", "save_scenario", "straight_replay_min_distance",
    "to_mixed",
    "BatchSummary", "batch_run", "run_record", "summarize",
]
