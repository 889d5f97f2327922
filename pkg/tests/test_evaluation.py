"""Evaluation harness: metrics, campaign aggregates, trajectory export."""

import json
import math
import random
import statistics

import pytest

from pursuitlab.episode import Action, EpisodeConfig, run_episode
from pursuitlab.evaluation import (
    EPSILON,
    action_accuracy,
    cross_entropy,
    export_trajectories,
    make_agent_factory,
    render_table,
    run_campaign,
    write_report,
)
from pursuitlab.llm import ChatMessage
from pursuitlab.navball import NavballAgent


def random_actions(rng: random.Random, n: int) -> list[Action]:
    return [
        Action(
            ft=rng.choice(("backward", "none", "forward")),
            rt=rng.choice(("left", "none", "right")),
            dt=rng.choice(("down", "none", "up")),
        )
        for _ in range(n)
    ]


def mutate(action: Action, rng: random.Random) -> Action:
    axis = rng.choice(("ft", "rt", "dt"))
    labels = {"ft": ("backward", "none", "forward"),
              "rt": ("left", "none", "right"),
              "dt": ("down", "none", "up")}[axis]
    current = getattr(action, axis)
    replacement = rng.choice([l for l in labels if l != current])
    return Action(**{**{"ft": action.ft, "rt": action.rt, "dt": action.dt}, axis: replacement})


class TestActionAccuracy:
    def test_identical_sequences_score_one(self):
        actions = random_actions(random.Random(0), 50)
        assert action_accuracy(actions, actions) == 1.0

    def test_one_axis_off_everywhere_scores_zero(self):
        rng = random.Random(1)
        truth = random_actions(rng, 50)
        predicted = [mutate(a, rng) for a in truth]
        assert action_accuracy(predicted, truth) == 0.0

    def test_counting_oracle_17_of_20(self):
        rng = random.Random(2)
        truth = random_actions(rng, 20)
        predicted = list(truth)
        for idx in (3, 11, 19):
            predicted[idx] = mutate(predicted[idx], rng)
        assert action_accuracy(predicted, truth) == pytest.approx(0.85)

    def test_length_mismatch_raises(self):
        actions = random_actions(random.Random(3), 5)
        with pytest.raises(ValueError):
            action_accuracy(actions[:-1], actions)


class TestCrossEntropy:
    def test_all_correct_is_zero(self):
        actions = random_actions(random.Random(4), 30)
        assert cross_entropy(actions, actions) == 0.0

    def test_single_wrong_sample_is_ln_epsilon(self):
        rng = random.Random(5)
        truth = random_actions(rng, 1)
        predicted = [mutate(truth[0], rng)]
        assert cross_entropy(predicted, truth) == pytest.approx(-math.log(EPSILON))
        assert cross_entropy(predicted, truth) == pytest.approx(36.044, abs=1e-3)

    def test_matches_accuracy_scaling(self):
        """Mean CE is (1 - accuracy) * -ln(eps) by construction."""
        rng = random.Random(6)
        truth = random_actions(rng, 1000)
        predicted = list(truth)
        wrong = rng.sample(range(1000), 951)
        for idx in wrong:
            predicted[idx] = mutate(predicted[idx], rng)
        accuracy = action_accuracy(predicted, truth)
        assert accuracy == pytest.approx(0.049)
        ce = cross_entropy(predicted, truth)
        assert ce == pytest.approx((1 - accuracy) * -math.log(EPSILON), rel=1e-12)
        assert abs(ce - 34.27) <= 0.1

    def test_bounds(self):
        rng = random.Random(7)
        truth = random_actions(rng, 40)
        predicted = [mutate(a, rng) if i % 2 else a for i, a in enumerate(truth)]
        ce = cross_entropy(predicted, truth)
        assert 0.0 <= ce <= -math.log(EPSILON)

    def test_length_mismatch_raises(self):
        actions = random_actions(random.Random(8), 5)
        with pytest.raises(ValueError):
            cross_entropy(actions, actions[:-1])


CONFIG = EpisodeConfig(max_duration=20.0)


class TestRunCampaign:
    def test_navball_campaign_never_fails(self):
        report = run_campaign(make_agent_factory("navball"), CONFIG, seeds=range(10))
        assert report.failure_rate == 0.0
        assert report.best_distance <= report.avg_distance
        assert report.latency_avg_ms is None  # scripted pilot, no completions

    def test_always_malformed_mock_fails_every_tick(self):
        from pursuitlab.llm import AgentConfig

        bad = [ChatMessage(role="assistant", content="beep boop")]
        factory = make_agent_factory(
            "mock",
            agent_config=AgentConfig(retry_wait=0.0),
            mock_replies=bad,
        )
        report = run_campaign(factory, CONFIG, seeds=[0, 1])
        assert report.failure_rate == 1.0
        # Default action is all-none, so the run must equal a pure coast.
        coast = run_campaign(make_agent_factory_coast(), CONFIG, seeds=[0, 1])
        assert [r.closest_distance for r in report.rows] == [
            r.closest_distance for r in coast.rows
        ]
        assert report.latency_avg_ms is not None

    def test_oracle_equals_navball_distance_columns(self):
        from pursuitlab.llm import AgentConfig

        seeds = range(5)
        direct = run_campaign(make_agent_factory("navball"), CONFIG, seeds=seeds)
        oracle = run_campaign(
            make_agent_factory("oracle", agent_config=AgentConfig(retry_wait=0.0)),
            CONFIG,
            seeds=seeds,
        )
        assert [r.closest_distance for r in oracle.rows] == [
            r.closest_distance for r in direct.rows
        ]
        assert [r.score for r in oracle.rows] == [r.score for r in direct.rows]
        assert oracle.failure_rate == 0.0

    def test_aggregates_match_independent_reducer(self):
        report = run_campaign(make_agent_factory("naive"), CONFIG, seeds=range(6))
        distances = [r.closest_distance for r in report.rows]
        scores = [r.score for r in report.rows]
        assert report.best_distance == min(distances)
        assert report.avg_distance == pytest.approx(sum(distances) / len(distances))
        assert report.best_score == min(scores)
        assert report.avg_score == pytest.approx(sum(scores) / len(scores))

    def test_seed_reproducibility(self):
        a = run_campaign(make_agent_factory("navball"), CONFIG, seeds=[3, 4, 5])
        b = run_campaign(make_agent_factory("navball"), CONFIG, seeds=[3, 4, 5])
        assert a == b

    def test_empty_seed_list_rejected(self):
        with pytest.raises(ValueError):
            run_campaign(make_agent_factory("naive"), CONFIG, seeds=[])

    def test_unknown_agent_kind_rejected(self):
        with pytest.raises(ValueError):
            make_agent_factory("psychic")

    def test_report_serializes_and_renders(self, tmp_path):
        report = run_campaign(make_agent_factory("naive"), CONFIG, seeds=[0, 1])
        path = tmp_path / "report.json"
        write_report(report, path)
        payload = json.loads(path.read_text())
        assert payload["aggregates"]["best_distance"] == report.best_distance
        assert len(payload["episodes"]) == 2
        table = render_table(report)
        assert "Closest (m)" in table

    def test_latency_stats_recomputable(self):
        from pursuitlab.llm import AgentConfig

        factory = make_agent_factory("mock", agent_config=AgentConfig(retry_wait=0.0))
        report = run_campaign(factory, CONFIG, seeds=[0, 1])
        pooled = [x for r in report.rows for x in r.latencies_ms]
        assert report.latency_best_ms == min(pooled)
        assert report.latency_avg_ms == pytest.approx(statistics.fmean(pooled))
        assert report.latency_std_ms == pytest.approx(statistics.pstdev(pooled))


def make_agent_factory_coast():
    from pursuitlab.episode import ALL_NONE

    class Coast:
        def get_action(self, obs):
            return ALL_NONE

    return lambda: Coast()


class TestExportTrajectories:
    def test_rows_match_substeps_and_ranges_recompute(self, tmp_path):
        results = []
        run_campaign(
            make_agent_factory("navball"), CONFIG, seeds=[7], collect_results=results
        )
        written = export_trajectories(results, tmp_path)
        traj = [p for p in written if p.suffix == ".jsonl"][0]
        lines = [json.loads(line) for line in traj.read_text().splitlines()]
        assert len(lines) == round(CONFIG.max_duration / CONFIG.substep)
        for row in lines:
            dx = [e - p for e, p in zip(row["evader"]["pos"], row["pursuer"]["pos"])]
            recomputed = math.sqrt(sum(c * c for c in dx))
            assert abs(row["range"] - recomputed) <= 1e-9 * max(1.0, recomputed)

    def test_deterministic_bytes(self, tmp_path):
        results = []
        run_campaign(make_agent_factory("navball"), CONFIG, seeds=[7], collect_results=results)
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        export_trajectories(results, a_dir)
        export_trajectories(results, b_dir)
        for name in ("trajectory_7.jsonl", "relative_motion_7.csv"):
            assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()

    def test_relative_motion_columns(self, tmp_path):
        results = []
        run_campaign(make_agent_factory("naive"), CONFIG, seeds=[2], collect_results=results)
        export_trajectories(results, tmp_path)
        lines = (tmp_path / "relative_motion_2.csv").read_text().splitlines()
        assert lines[0] == "t,range,range_rate"
        assert len(lines) - 1 == len(results[0].trajectory)
