import math

import numpy as np
import pytest

from vesselsim.dynamics import container_ship
from vesselsim.geometry import rad2vec, vec2rad
from vesselsim.predicates import EncounterKind
from vesselsim.waypoints import (WaypointKind, Waypoint, WaypointPlan,
                                 make_guiding, consume_waypoints, resume_plan,
                                 stable_orientation, plan_head_on,
                                 plan_crossing, plan_overtake, plan_stand_on,
                                 WaypointEngine)

from conftest import state


def crossing_pair(type1):
    """Ego eastbound, intruder from starboard heading north across the bow."""
    s_self = state(0.0, 0.0, 0.0, 8.4)
    s_obs = state(1000.0, -1000.0, math.pi / 2, 8.4)
    return s_self, s_obs


class TestGuidingWaypoints:
    def test_position_along_direction(self, type1):
        w = make_guiding([0.0, 0.0], 0.0, type1)
        assert np.allclose(w.position, [1e6, 0.0])
        assert w.kind is WaypointKind.GUIDING
        w = make_guiding([0.0, 0.0], math.pi / 2, type1)
        assert np.allclose(w.position, [0.0, 1e6], atol=1e-6)

    def test_short_d_guide_is_configuration_error(self):
        # horizon reach is 90 * 16.8 = 1512 m; 100 m could be overrun
        p = container_ship(d_guide=100.0)
        with pytest.raises(ValueError):
            make_guiding([0.0, 0.0], 0.0, p)


class TestConsumeAndResume:
    def test_waypoint_consumed_within_d_wp(self, type1):
        plan = WaypointPlan.from_goals([0.0, 0.0],
                                       [[80.0, 0.0], [5000.0, 0.0]])
        consume_waypoints(plan, state(0.0, 0.0, 0.0, 5.0), type1)
        assert len(plan.active) == 1
        assert plan.reached == [True, False]
        assert np.allclose(plan.last_reached, [80.0, 0.0])

    def test_waypoint_not_consumed_beyond_d_wp(self, type1):
        plan = WaypointPlan.from_goals([0.0, 0.0],
                                       [[90.0, 0.0], [5000.0, 0.0]])
        consume_waypoints(plan, state(0.0, 0.0, 0.0, 5.0), type1)
        assert len(plan.active) == 2
        assert plan.reached == [False, False]

    def test_final_goal_uses_tight_radius(self, type1):
        # d_term = 43.75 m for the 175 m hull
        plan = WaypointPlan.from_goals([0.0, 0.0], [[43.0, 0.0]])
        consume_waypoints(plan, state(0.0, 0.0, 0.0, 5.0), type1)
        assert plan.all_reached()
        plan = WaypointPlan.from_goals([0.0, 0.0], [[44.0, 0.0]])
        consume_waypoints(plan, state(0.0, 0.0, 0.0, 5.0), type1)
        assert not plan.all_reached()

    def test_guiding_waypoints_never_consumed(self, type1):
        plan = WaypointPlan.from_goals([0.0, 0.0], [[5000.0, 0.0]])
        plan.active = [Waypoint(np.zeros(2), WaypointKind.GUIDING)]
        consume_waypoints(plan, state(0.0, 0.0, 0.0, 5.0), type1)
        assert len(plan.active) == 1

    def test_resume_restores_unreached_suffix(self):
        plan = WaypointPlan.from_goals(
            [0.0, 0.0], [[100.0, 0.0], [200.0, 0.0], [300.0, 0.0]])
        plan.reached[0] = True
        plan.active = [Waypoint(np.array([9.0, 9.0]), WaypointKind.GUIDING)]
        resume_plan(plan)
        assert [wp.goal_index for wp in plan.active] == [1, 2]
        assert all(wp.kind is WaypointKind.NORMAL for wp in plan.active)

    def test_resume_single_goal(self):
        plan = WaypointPlan.from_goals([0.0, 0.0], [[100.0, 0.0]])
        plan.active = []
        resume_plan(plan)
        assert len(plan.active) == 1
        assert np.allclose(plan.active[0].position, [100.0, 0.0])

    def test_empty_goal_list_rejected(self):
        with pytest.raises(ValueError):
            WaypointPlan.from_goals([0.0, 0.0], [])


class TestStableOrientation:
    def test_constant_aligned_heading(self, type1):
        # leg pointing east, ten matching heading samples (t_so = 10 dt)
        headings = [0.0] * 10
        assert stable_orientation(headings, [0.0, 0.0], [100.0, 0.0], type1)

    def test_offset_above_tolerance(self, type1):
        headings = [2 * type1.alpha_so] * 10
        assert not stable_orientation(headings, [0.0, 0.0], [100.0, 0.0],
                                      type1)

    def test_partial_alignment_fails(self, type1):
        headings = [1.0] * 5 + [0.0] * 5
        assert not stable_orientation(headings, [0.0, 0.0], [100.0, 0.0],
                                      type1)

    def test_short_window_not_stable(self, type1):
        assert not stable_orientation([0.0] * 9, [0.0, 0.0], [100.0, 0.0],
                                      type1)


class TestManeuverPlanners:
    def test_head_on_guides_right_of_heading(self, type1):
        s = state(0.0, 0.0, math.pi / 2, 8.4)
        obs = state(0.0, 2000.0, -math.pi / 2, 8.4)
        wps, phase = plan_head_on(s, obs, "o", type1)
        assert len(wps) == 1
        want = 1e6 * rad2vec(math.pi / 2 - type1.alpha_h1)
        assert np.allclose(wps[0].position, want)
        assert phase.kind is EncounterKind.HEAD_ON_GIVE_WAY

    def test_crossing_moderate_bearing_turns_alpha(self, type1):
        # obstacle 30 degrees to starboard, less than alpha_c1 = 45 degrees:
        # aim alpha_c1 right of own heading
        s = state(0.0, 0.0, 0.0, 8.4)
        bear = math.radians(-30.0)
        obs = state(1000.0 * math.cos(bear), 1000.0 * math.sin(bear),
                    math.pi / 2, 8.4)
        wps, _ = plan_crossing(s, obs, "o", type1)
        want = type1.d_c1 * rad2vec(-type1.alpha_c1)
        assert np.allclose(wps[0].position, want)
        assert wps[0].kind is WaypointKind.NORMAL
        # d_c1 = 1.5 * 0.785 * 8.4 / 0.03 = 329.7 m for the type 1 preset
        assert np.linalg.norm(wps[0].position) == pytest.approx(329.7)

    def test_crossing_steep_bearing_aims_at_obstacle(self, type1):
        # obstacle 60 degrees to starboard, beyond alpha_c1: aim straight at it
        s = state(0.0, 0.0, 0.0, 8.4)
        bear = math.radians(-60.0)
        obs_pos = 1000.0 * np.array([math.cos(bear), math.sin(bear)])
        obs = state(obs_pos[0], obs_pos[1], math.pi / 2, 8.4)
        wps, _ = plan_crossing(s, obs, "o", type1)
        want = type1.d_c1 * rad2vec(bear)
        assert np.allclose(wps[0].position, want)

    def test_crossing_second_waypoint_perpendicular_right(self, type1):
        s = state(0.0, 0.0, 0.3, 8.4)
        obs = state(1000.0, -800.0, math.pi / 2, 8.4)
        wps, _ = plan_crossing(s, obs, "o", type1)
        assert wps[1].kind is WaypointKind.GUIDING
        direction = vec2rad(wps[1].position, wps[0].position)
        assert direction == pytest.approx(0.3 - math.pi / 2, abs=1e-9)

    def test_overtake_same_heading_goes_starboard(self, type1):
        s = state(0.0, 0.0, 0.0, 8.4)
        obs = state(1500.0, 0.0, 0.0, 3.5)
        wps, _ = plan_overtake(s, obs, "o", type1)
        w1 = wps[0].position
        # on the obstacle's beam line, at least d_o1 = 400.8 m to starboard
        assert w1[0] == pytest.approx(1500.0)
        assert w1[1] <= -type1.d_o1 + 1e-9
        # reaching it requires a course change of at least alpha_o1
        turn = abs(vec2rad(w1, s.position))
        assert turn >= type1.alpha_o1 - 1e-6
        assert wps[1].kind is WaypointKind.GUIDING

    def test_overtake_obstacle_heading_starboard_goes_port(self, type1):
        s = state(0.0, 0.0, 0.0, 8.4)
        obs = state(1500.0, 0.0, -0.3, 3.5)
        wps, _ = plan_overtake(s, obs, "o", type1)
        # port side: waypoint left of the obstacle's track
        side = rad2vec(obs.phi + math.pi / 2)
        outward = float((wps[0].position - obs.position) @ side)
        assert outward >= type1.d_o1 - 1e-9

    def test_overtake_parallel_lines_fall_back(self, type1):
        # obstacle heading chosen so its beam line is parallel to our
        # evasion ray: waypoint drops onto the ray at d_o1
        s = state(0.0, 0.0, 0.0, 8.4)
        obs = state(1500.0, 10.0, -type1.alpha_o1 + math.pi / 2, 3.5)
        wps, _ = plan_overtake(s, obs, "o", type1)
        want = type1.d_o1 * rad2vec(-type1.alpha_o1)
        assert np.allclose(wps[0].position, want)

    def test_stand_on_guides_dead_ahead(self, type1):
        s = state(10.0, 20.0, 0.7, 8.4)
        obs = state(-1000.0, 500.0, -0.7, 8.4)
        wps, phase = plan_stand_on(s, obs, "o", type1)
        assert len(wps) == 1
        assert wps[0].kind is WaypointKind.GUIDING
        assert np.allclose(wps[0].position,
                           s.position + 1e6 * rad2vec(0.7))
        assert phase.kind is EncounterKind.STAND_ON


class TestEngineDetection:
    def make_engine(self, type1, goals=((6000.0, 0.0),)):
        return WaypointEngine("ego", type1, [np.asarray(g) for g in goals],
                              state(0.0, 0.0, 0.0, 8.4))

    def test_no_traffic_leaves_plan_unchanged(self, type1):
        eng = self.make_engine(type1)
        before = [wp.position.copy() for wp in eng.plan.active]
        for _ in range(50):
            eng.update_waypoints(state(0.0, 0.0, 0.0, 8.4), [])
        assert eng.current_kind is EncounterKind.NONE
        assert len(eng.plan.active) == len(before)
        assert all(np.allclose(a.position, b)
                   for a, b in zip(eng.plan.active, before))

    def test_lock_requires_persistence(self, type1):
        eng = self.make_engine(type1)
        s_self, s_obs = crossing_pair(type1)
        others = [("obs", s_obs, type1)]
        for _ in range(29):
            eng.update_waypoints(s_self, others)
        assert eng.phase is None
        eng.update_waypoints(s_self, others)  # 30th consecutive detection
        assert eng.current_kind is EncounterKind.CROSSING_GIVE_WAY

    def test_interrupted_detection_starts_over(self, type1):
        eng = self.make_engine(type1)
        s_self, s_obs = crossing_pair(type1)
        far = state(50_000.0, 0.0, 0.0, 8.4)
        for _ in range(20):
            eng.update_waypoints(s_self, [("obs", s_obs, type1)])
        eng.update_waypoints(s_self, [("obs", far, type1)])  # gap resets
        for _ in range(29):
            eng.update_waypoints(s_self, [("obs", s_obs, type1)])
        assert eng.phase is None

    def test_crossing_lock_installs_two_waypoints(self, type1):
        eng = self.make_engine(type1)
        s_self, s_obs = crossing_pair(type1)
        for _ in range(30):
            eng.update_waypoints(s_self, [("obs", s_obs, type1)])
        assert [wp.kind for wp in eng.plan.active] == [WaypointKind.NORMAL,
                                                       WaypointKind.GUIDING]

    def test_first_turn_is_starboard_for_give_way(self, type1):
        # relative bearing of the first maneuver waypoint is clockwise
        cases = [
            (state(2000.0, 0.0, math.pi, 8.4),
             EncounterKind.HEAD_ON_GIVE_WAY),       # reciprocal course
            (state(1000.0, -1000.0, math.pi / 2, 8.4),
             EncounterKind.CROSSING_GIVE_WAY),       # from starboard
        ]
        for s_obs, want_kind in cases:
            eng = self.make_engine(type1)
            s_self = state(0.0, 0.0, 0.0, 8.4)
            for _ in range(30):
                eng.update_waypoints(s_self, [("obs", s_obs, type1)])
            assert eng.current_kind is want_kind
            rel = vec2rad(eng.plan.active[0].position, s_self.position)
            assert rel < 0.0

    def test_stand_on_guides_along_entry_heading(self, type1):
        eng = self.make_engine(type1)
        s_self = state(0.0, 0.0, 0.0, 8.4)
        s_obs = state(1000.0, 1000.0, -math.pi / 2, 8.4)  # crosses from port
        for _ in range(30):
            eng.update_waypoints(s_self, [("obs", s_obs, type1)])
        assert eng.current_kind is EncounterKind.STAND_ON
        assert len(eng.plan.active) == 1
        wp = eng.plan.active[0]
        assert wp.kind is WaypointKind.GUIDING
        assert np.allclose(wp.position, [1e6, 0.0])

    def test_goal_reached_marks_finished(self, type1):
        eng = WaypointEngine("ego", type1, [np.array([30.0, 0.0])],
                             state(0.0, 0.0, 0.0, 8.4))
        eng.update_waypoints(state(0.0, 0.0, 0.0, 8.4), [])
        assert eng.finished
        # further updates are no-ops
        eng.update_waypoints(state(0.0, 0.0, 0.0, 8.4), [])
        assert eng.plan.all_reached()


class TestEnginePhases:
    def run_head_on_flyby(self, type1, steps=220):
        """Straight constant-velocity fly-by exercising every head-on stage.

        Both states are scripted, so the engine's phase machine is observed
        in isolation from the controller.
        """
        eng = WaypointEngine("ego", type1, [np.array([6000.0, 0.0])],
                             state(0.0, 0.0, 0.0, 8.4))
        stages = []
        for t in range(steps):
            s_self = state(8.4 * t, 0.0, 0.0, 8.4)
            s_obs = state(2000.0 - 8.4 * t, 0.0, -math.pi, 8.4)
            eng.update_waypoints(s_self, [("obs", s_obs, type1)])
            stages.append(eng.phase.stage if eng.phase else None)
        return eng, stages

    def test_head_on_stages_progress_and_terminate(self, type1):
        eng, stages = self.run_head_on_flyby(type1)
        seen = [s for s in stages if s is not None]
        assert 1 in seen and 2 in seen
        assert stages[-1] is None  # terminated and resumed
        assert [wp.goal_index for wp in eng.plan.active] == [0]

    def test_phase_indices_never_decrease(self, type1):
        _, stages = self.run_head_on_flyby(type1)
        active = [s for s in stages if s is not None]
        assert all(b >= a for a, b in zip(active, active[1:]))

    def test_resume_resets_reference_anchor(self, type1):
        eng, stages = self.run_head_on_flyby(type1)
        # after termination the reference leg starts at the vessel, not at
        # some pre-encounter waypoint far behind
        end = next(i for i in range(1, len(stages))
                   if stages[i] is None and stages[i - 1] is not None)
        assert np.allclose(eng.plan.last_reached, [8.4 * end, 0.0])

    def test_vanished_partner_resumes_plan(self, type1):
        eng = WaypointEngine("ego", type1, [np.array([6000.0, 0.0])],
                             state(0.0, 0.0, 0.0, 8.4))
        s_self, s_obs = crossing_pair(type1)
        for _ in range(30):
            eng.update_waypoints(s_self, [("obs", s_obs, type1)])
        assert eng.phase is not None
        eng.update_waypoints(s_self, [])  # partner reached its goal
        assert eng.phase is None
        assert [wp.goal_index for wp in eng.plan.active] == [0]
        assert np.allclose(eng.plan.last_reached, s_self.position)

    def test_stand_on_exit_needs_persistent_clear(self, type1):
        eng = WaypointEngine("ego", type1, [np.array([6000.0, 0.0])],
                             state(0.0, 0.0, 0.0, 8.4))
        s_self = state(0.0, 0.0, 0.0, 8.4)
        s_obs = state(1000.0, 1000.0, -math.pi / 2, 8.4)
        gone = state(1000.0, 1000.0, math.pi / 2, 8.4)  # turned away
        for _ in range(30):
            eng.update_waypoints(s_self, [("obs", s_obs, type1)])
        assert eng.current_kind is EncounterKind.STAND_ON
        for _ in range(29):
            eng.update_waypoints(s_self, [("obs", gone, type1)])
        assert eng.current_kind is EncounterKind.STAND_ON
        eng.update_waypoints(s_self, [("obs", gone, type1)])
        assert eng.current_kind is EncounterKind.NONE

    def test_engine_is_deterministic(self, type1):
        runs = []
        for _ in range(2):
            eng, stages = self.run_head_on_flyby(type1)
            runs.append((stages,
                         [tuple(wp.position) for wp in eng.plan.active]))
        assert runs[0] == runs[1]

    def test_mirror_head_on_plans_are_mirror_images(self, type1):
        """Rotating one vessel's plan by pi about the midpoint gives the
        other's, so symmetric numerics can produce identical controls."""
        a = WaypointEngine("a", type1, [np.array([4000.0, 0.0])],
                           state(0.0, 0.0, 0.0, 8.4))
        b = WaypointEngine("b", type1, [np.array([-2000.0, 0.0])],
                           state(2000.0, 0.0, -math.pi, 8.4))
        s_a = state(0.0, 0.0, 0.0, 8.4)
        s_b = state(2000.0, 0.0, -math.pi, 8.4)
        for _ in range(30):
            a.update_waypoints(s_a, [("b", s_b, type1)])
            b.update_waypoints(s_b, [("a", s_a, type1)])
        assert a.current_kind is EncounterKind.HEAD_ON_GIVE_WAY
        assert b.current_kind is EncounterKind.HEAD_ON_GIVE_WAY
        wa = a.plan.active[0].position
        wb = b.plan.active[0].position
        rotated = np.array([2000.0, 0.0]) - wa  # rotation by pi about center
        assert np.allclose(rotated, wb, atol=1e-6)
