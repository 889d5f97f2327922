"""Scenario engine: stepping, throttle mapping, evader policy, scoring."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pursuitlab.episode import (
    ALL_NONE,
    Action,
    Episode,
    EpisodeConfig,
    NaiveAgent,
    ScoreWeights,
    action_from_dict,
    action_to_dict,
    action_to_throttle,
    build_observation,
    compute_score,
    config_from_dict,
    config_to_dict,
    evader_policy_e3,
    run_episode,
)
from pursuitlab.orbit import KERBIN, ZERO, Vec3, VesselState, propagate


class TestAction:
    def test_rejects_unknown_labels(self):
        with pytest.raises(ValueError):
            Action(ft="sideways")
        with pytest.raises(ValueError):
            Action(rt="up")  # up is a dt label, not an rt label
        with pytest.raises(ValueError):
            Action(duration=0.0)

    def test_round_trips_through_dict(self):
        a = Action(ft="forward", rt="left", dt="up", duration=0.5)
        assert action_from_dict(action_to_dict(a)) == a


class TestActionToThrottle:
    @pytest.mark.parametrize(
        "action,expected",
        [
            (Action(ft="forward", rt="left", dt="up"), (-1.0, 1.0, 1.0)),
            (Action(), (0.0, 0.0, 0.0)),
            (Action(ft="backward", rt="right", dt="down"), (1.0, -1.0, -1.0)),
        ],
    )
    def test_axis_signs(self, action, expected):
        assert action_to_throttle(action).as_tuple() == expected


class TestEvaderPolicy:
    @staticmethod
    def states(separation: float):
        evader = VesselState(Vec3(separation, 0, 0), Vec3(0, 10, 0), 2000.0, 1000.0)
        pursuer = VesselState(Vec3(0, 0, 0), Vec3(0, 0, 0), 2000.0, 1000.0)
        return evader, pursuer

    def test_at_threshold_exactly_is_quiet(self):
        evader, pursuer = self.states(400.0)
        assert evader_policy_e3(evader, pursuer, threshold=400.0) == ZERO

    def test_inside_threshold_burns_away_at_full_thrust(self):
        evader, pursuer = self.states(200.0)
        thrust = evader_policy_e3(evader, pursuer, threshold=400.0)
        assert thrust.norm() == pytest.approx(8000.0)
        assert thrust.unit().as_tuple() == pytest.approx((1.0, 0.0, 0.0))

    def test_far_outside_is_quiet(self):
        evader, pursuer = self.states(4000.0)
        assert evader_policy_e3(evader, pursuer, threshold=400.0) == ZERO

    def test_prograde_escape_variant(self):
        evader, pursuer = self.states(200.0)
        thrust = evader_policy_e3(evader, pursuer, threshold=400.0, escape_direction="prograde")
        assert thrust.unit().as_tuple() == pytest.approx((0.0, 1.0, 0.0))


class TestComputeScore:
    def test_zero_inputs_give_zero(self):
        assert compute_score(0.0, 0.0, 0.0, 0.0) == 0.0

    def test_hand_evaluated_anchor(self):
        # 100 + 5**1.5 + 10**1.25 + 1, evaluated term by term beforehand.
        assert compute_score(100.0, 10.0, 100.0, 100.0) == pytest.approx(129.9631, abs=1e-3)

    def test_time_term_is_linear(self):
        base = compute_score(3.0, 4.0, 5.0, 100.0)
        doubled = compute_score(3.0, 4.0, 5.0, 200.0)
        assert doubled - base == 0.01 * 100.0

    def test_negative_component_raises(self):
        with pytest.raises(ValueError):
            compute_score(-1.0, 0.0, 0.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(0.0, 1e4),
        st.floats(0.0, 1e3),
        st.floats(0.0, 1e3),
        st.floats(0.0, 1e4),
        st.sampled_from(["distance", "velocity", "fuel", "time"]),
    )
    def test_strictly_increasing_per_component(self, d, v, f, t, which):
        bump = {"distance": (1.0, 0, 0, 0), "velocity": (0, 1.0, 0, 0),
                "fuel": (0, 0, 1.0, 0), "time": (0, 0, 0, 1.0)}[which]
        before = compute_score(d, v, f, t)
        after = compute_score(d + bump[0], v + bump[1], f + bump[2], t + bump[3])
        assert after > before

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            ScoreWeights(distance_scale=0.0)


def short_config(**overrides) -> EpisodeConfig:
    defaults = dict(seed=3, max_duration=10.0)
    defaults.update(overrides)
    return EpisodeConfig(**defaults)


class TestEpisode:
    def test_reset_is_deterministic(self):
        a = Episode(short_config()).reset()
        b = Episode(short_config()).reset()
        assert a == b

    def test_initial_range_within_constraints(self):
        cfg = short_config()
        obs = Episode(cfg).reset()
        assert cfg.constraints.distance_min <= obs.range <= cfg.constraints.distance_max
        assert obs.range == pytest.approx((obs.evader_pos - obs.pursuer_pos).norm(), rel=1e-9)

    def test_prograde_absent_only_for_zero_relative_velocity(self):
        obs = Episode(short_config()).reset()
        assert obs.prograde is not None  # generated orbits always drift

        vel = Vec3(0.0, 2170.0, 0.0)
        pursuer = VesselState(Vec3(750_000.0, 0, 0), vel, 2000.0, 1000.0)
        evader = VesselState(Vec3(750_000.0, 1000.0, 0), vel, 2000.0, 1000.0)
        degenerate = build_observation(0.0, pursuer, evader)
        assert degenerate.prograde is None

    def test_time_advances_by_decision_period(self):
        episode = Episode(short_config())
        obs = episode.reset()
        assert obs.time_elapsed == 0.0
        for k in range(4):
            obs, _ = episode.step(ALL_NONE)
            assert obs.time_elapsed == (k + 1) * 0.5

    def test_all_none_matches_pure_coast(self):
        cfg = short_config(max_duration=5.0)
        episode = Episode(cfg)
        first = episode.reset()
        done = False
        while not done:
            _, done = episode.step(ALL_NONE)
        result = episode.result()

        pursuer = VesselState(first.pursuer_pos, first.pursuer_vel, 2000.0, 1000.0)
        for row in result.trajectory:
            pursuer = propagate(pursuer, ZERO, KERBIN, dt=cfg.substep, step=cfg.substep)
            assert row.pursuer_pos == pursuer.position
            assert row.pursuer_vel == pursuer.velocity

    def test_forward_burn_adds_velocity_along_target_line(self):
        cfg = short_config(max_duration=0.5)
        coast, burn = Episode(cfg), Episode(cfg)
        first = coast.reset()
        burn.reset()
        forward = (first.evader_pos - first.pursuer_pos).unit()

        coast_obs, _ = coast.step(ALL_NONE)
        burn_obs, _ = burn.step(Action(ft="forward"))
        delta_v = burn_obs.pursuer_vel - coast_obs.pursuer_vel
        expected = 8000.0 / first.vehicle_mass * 0.5
        assert delta_v.dot(forward) == pytest.approx(expected, rel=5e-3)
        assert (delta_v - forward * delta_v.dot(forward)).norm() < 0.05 * expected

    def test_sub_period_burn_duration_limits_fuel(self):
        cfg = short_config(max_duration=0.5)
        episode = Episode(cfg)
        episode.reset()
        episode.step(Action(ft="forward", duration=0.2))  # 2 of 5 substeps burn
        result = episode.result()
        assert result.fuel_used == pytest.approx(0.2, rel=1e-9)

    def test_step_after_done_raises(self):
        episode = Episode(short_config(max_duration=1.0))
        episode.reset()
        done = False
        while not done:
            _, done = episode.step(ALL_NONE)
        with pytest.raises(RuntimeError):
            episode.step(ALL_NONE)

    def test_fuel_accounting(self):
        result = run_episode(NaiveAgent(), short_config(max_duration=5.0))
        assert result.fuel_used == pytest.approx(5.0, rel=1e-9)  # 1 kg/s single axis

        coast_result = run_episode(_CoastAgent(), short_config(max_duration=5.0))
        assert coast_result.fuel_used == 0.0

    def test_closest_distance_bounds_observed_ranges(self):
        cfg = short_config(max_duration=30.0)
        episode = Episode(cfg)
        obs = episode.reset()
        ranges = [obs.range]
        done = False
        while not done:
            obs, done = episode.step(Action(ft="forward"))
            ranges.append(obs.range)
        result = episode.result()
        assert result.closest_distance <= min(ranges)
        assert result.closest_distance == min(r.range for r in result.trajectory) or (
            result.closest_distance == ranges[0]
        )

    def test_trajectory_row_count_matches_substeps(self):
        cfg = short_config(max_duration=7.0)
        result = run_episode(_CoastAgent(), cfg)
        assert len(result.trajectory) == round(cfg.max_duration / cfg.substep)

    def test_identical_inputs_reproduce_results_bitwise(self):
        cfg = short_config(max_duration=5.0)
        r1 = run_episode(NaiveAgent(), cfg)
        r2 = run_episode(NaiveAgent(), cfg)
        assert r1 == r2

    def test_score_components_are_consistent(self):
        cfg = short_config(max_duration=5.0)
        result = run_episode(NaiveAgent(), cfg)
        assert result.score == compute_score(
            result.closest_distance,
            result.speed_at_closest,
            result.fuel_used,
            result.elapsed,
            cfg.score_weights,
        )
        assert result.termination_reason == "time-limit"
        assert result.elapsed == 5.0


class _CoastAgent:
    def get_action(self, obs):
        return ALL_NONE


class TestConfig:
    def test_invalid_configs_raise(self):
        with pytest.raises(ValueError):
            EpisodeConfig(max_duration=0.0)
        with pytest.raises(ValueError):
            EpisodeConfig(evader_threshold=-5.0)
        with pytest.raises(ValueError):
            EpisodeConfig(decision_period=0.5, substep=0.3)

    def test_round_trips_through_dict(self):
        cfg = EpisodeConfig(seed=17, evader_threshold=250.0)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_partial_dict_fills_defaults(self):
        cfg = config_from_dict({"seed": 5})
        assert cfg.seed == 5
        assert cfg.max_duration == 240.0

    def test_bad_dict_raises_value_error(self):
        with pytest.raises(ValueError):
            config_from_dict({"evader_threshold": -1.0})
