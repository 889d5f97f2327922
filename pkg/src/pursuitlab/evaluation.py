"""Campaign runner and metrics.

Runs seeded episode campaigns for any agent kind, aggregates the
distance/speed/fuel/score columns plus failure-rate and latency
statistics, computes action accuracy and the one-hot cross-entropy
metric, and exports per-episode trajectory and relative-motion files.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .episode import (
    Action,
    Agent,
    EpisodeConfig,
    EpisodeResult,
    NaiveAgent,
    run_episode,
    trajectory_row_to_dict,
)
from .llm import AgentConfig, ChatMessage, HttpChatClient, LLMAgent, MockChatClient, OracleChatClient
from .navball import DEFAULT_NAVBALL_PARAMS, NavballAgent, NavballParams

# One-hot probability clamp for the cross-entropy metric: double-precision
# machine epsilon, so a miss costs -ln(eps) ~= 36.04.
EPSILON = sys.float_info.epsilon


def action_accuracy(predicted: Sequence[Action], truth: Sequence[Action]) -> float:
    """Mean exact-match indicator over full (ft, rt, dt) triples."""
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} vs {len(truth)}")
    if not truth:
        raise ValueError("cannot score empty sequences")
    matches = sum(1 for p, t in zip(predicted, truth) if p.labels() == t.labels())
    return matches / len(truth)


def cross_entropy(predicted: Sequence[Action], truth: Sequence[Action]) -> float:
    """Mean logistic loss of one-hot 27-class predictions.

    The predicted probability of the true class is 1 on a match and 0 on
    a miss, clamped into [EPSILON, 1], so each sample contributes 0 or
    -ln(EPSILON).
    """
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} vs {len(truth)}")
    if not truth:
        raise ValueError("cannot score empty sequences")
    miss_loss = -math.log(EPSILON)
    total = sum(
        0.0 if p.labels() == t.labels() else miss_loss for p, t in zip(predicted, truth)
    )
    return total / len(truth)


@dataclass(frozen=True)
class EpisodeRow:
    """Per-episode results plus the agent's failure/latency bookkeeping."""

    seed: int
    closest_distance: float
    speed_at_closest: float
    fuel_used: float
    elapsed: float
    score: float
    termination_reason: str
    attempts: int
    failures: int
    latencies_ms: tuple[float, ...]


@dataclass(frozen=True)
class CampaignReport:
    """Campaign aggregates over per-episode rows (best = lowest)."""

    agent: str
    rows: tuple[EpisodeRow, ...]
    best_distance: float
    avg_distance: float
    best_speed: float
    avg_speed: float
    best_fuel: float
    avg_fuel: float
    best_score: float
    avg_score: float
    failure_rate: float
    latency_best_ms: float | None
    latency_avg_ms: float | None
    latency_std_ms: float | None

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "episodes": [
                {
                    "seed": r.seed,
                    "closest_distance": r.closest_distance,
                    "speed_at_closest": r.speed_at_closest,
                    "fuel_used": r.fuel_used,
                    "elapsed": r.elapsed,
                    "score": r.score,
                    "termination_reason": r.termination_reason,
                    "attempts": r.attempts,
                    "failures": r.failures,
                    "latencies_ms": list(r.latencies_ms),
                }
                for r in self.rows
            ],
            "aggregates": {
                "best_distance": self.best_distance,
                "avg_distance": self.avg_distance,
                "best_speed": self.best_speed,
                "avg_speed": self.avg_speed,
                "best_fuel": self.best_fuel,
                "avg_fuel": self.avg_fuel,
                "best_score": self.best_score,
                "avg_score": self.avg_score,
                "failure_rate": self.failure_rate,
                "latency_best_ms": self.latency_best_ms,
                "latency_avg_ms": self.latency_avg_ms,
                "latency_std_ms": self.latency_std_ms,
            },
        }


def _aggregate(agent_label: str, rows: list[EpisodeRow]) -> CampaignReport:
    distances = [r.closest_distance for r in rows]
    speeds = [r.speed_at_closest for r in rows]
    fuels = [r.fuel_used for r in rows]
    scores = [r.score for r in rows]
    attempts = sum(r.attempts for r in rows)
    failures = sum(r.failures for r in rows)
    latencies = [x for r in rows for x in r.latencies_ms]
    return CampaignReport(
        agent=agent_label,
        rows=tuple(rows),
        best_distance=min(distances),
        avg_distance=statistics.fmean(distances),
        best_speed=min(speeds),
        avg_speed=statistics.fmean(speeds),
        best_fuel=min(fuels),
        avg_fuel=statistics.fmean(fuels),
        best_score=min(scores),
        avg_score=statistics.fmean(scores),
        failure_rate=(failures / attempts) if attempts else 0.0,
        latency_best_ms=min(latencies) if latencies else None,
        latency_avg_ms=statistics.fmean(latencies) if latencies else None,
        latency_std_ms=statistics.pstdev(latencies) if latencies else None,
    )


def run_campaign(
    agent_factory: Callable[[], Agent],
    config: EpisodeConfig,
    seeds: Sequence[int],
    agent_label: str = "agent",
    collect_results: list[EpisodeResult] | None = None,
) -> CampaignReport:
    """One episode per seed with a fresh agent instance each time.

    Agents exposing attempts/failures/latencies_ms (the LLM pilot) feed
    the failure-rate and latency columns; scripted agents report zero
    attempts. Pass collect_results to also receive the raw EpisodeResults
    (for trajectory export).
    """
    from dataclasses import replace

    if not seeds:
        raise ValueError("at least one seed is required")
    rows: list[EpisodeRow] = []
    for seed in seeds:
        agent = agent_factory()
        result = run_episode(agent, replace(config, seed=seed))
        if collect_results is not None:
            collect_results.append(result)
        rows.append(
            EpisodeRow(
                seed=seed,
                closest_distance=result.closest_distance,
                speed_at_closest=result.speed_at_closest,
                fuel_used=result.fuel_used,
                elapsed=result.elapsed,
                score=result.score,
                termination_reason=result.termination_reason,
                attempts=getattr(agent, "attempts", 0),
                failures=getattr(agent, "failures", 0),
                latencies_ms=tuple(getattr(agent, "latencies_ms", ())),
            )
        )
    return _aggregate(agent_label, rows)


AGENT_KINDS = ("navball", "naive", "llm", "oracle", "mock")


def make_agent_factory(
    kind: str,
    agent_config: AgentConfig | None = None,
    navball_params: NavballParams | None = None,
    mock_replies: list[ChatMessage] | None = None,
) -> Callable[[], Agent]:
    """Factory for the CLI's agent kinds; fresh state per episode."""
    params = navball_params or DEFAULT_NAVBALL_PARAMS
    config = agent_config or AgentConfig()
    if kind == "navball":
        return lambda: NavballAgent(params)
    if kind == "naive":
        return lambda: NaiveAgent()
    if kind == "oracle":
        return lambda: LLMAgent(config, OracleChatClient(params))
    if kind == "llm":
        return lambda: LLMAgent(config, HttpChatClient(config))
    if kind == "mock":
        replies = mock_replies if mock_replies is not None else [
            ChatMessage(
                role="assistant",
                content="",
                function_call={
                    "name": "perform_action",
                    "arguments": {"ft": "forward", "rt": "none", "dt": "none"},
                },
            )
        ]
        return lambda: LLMAgent(config, MockChatClient(replies, cycle=True))
    raise ValueError(f"agent kind must be one of {AGENT_KINDS}, got {kind!r}")


def render_table(report: CampaignReport) -> str:
    """Aligned text table: one row per episode plus an aggregate line."""
    headers = ["Seed", "Closest (m)", "Speed (m/s)", "Fuel (kg)", "Score", "Failures"]
    rows = [
        [
            str(r.seed),
            f"{r.closest_distance:.2f}",
            f"{r.speed_at_closest:.2f}",
            f"{r.fuel_used:.2f}",
            f"{r.score:.2f}",
            f"{r.failures}/{r.attempts}",
        ]
        for r in report.rows
    ]
    rows.append(
        [
            "best/avg",
            f"{report.best_distance:.2f}/{report.avg_distance:.2f}",
            f"{report.best_speed:.2f}/{report.avg_speed:.2f}",
            f"{report.best_fuel:.2f}/{report.avg_fuel:.2f}",
            f"{report.best_score:.2f}/{report.avg_score:.2f}",
            f"{report.failure_rate:.3f}",
        ]
    )
    widths = [max(len(str(cell)) for cell in column) for column in zip(headers, *rows)]
    lines = [
        " | ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "-+-".join("-" * w for w in widths),
    ]
    lines += [" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(f"[{report.agent}] " + line for line in lines)


def write_report(report: CampaignReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")


def export_trajectories(
    results: Sequence[EpisodeResult], out_dir: str | Path
) -> list[Path]:
    """Per-episode trajectory JSONL plus a relative-motion CSV (t, range,
    range_rate). Deterministic bytes for identical results."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for result in results:
        traj_path = out / f"trajectory_{result.seed}.jsonl"
        with open(traj_path, "w", encoding="utf-8") as fh:
            for row in result.trajectory:
                fh.write(json.dumps(trajectory_row_to_dict(row)) + "\n")
        written.append(traj_path)

        rel_path = out / f"relative_motion_{result.seed}.csv"
        with open(rel_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "range", "range_rate"])
            for row in result.trajectory:
                writer.writerow([repr(row.t), repr(row.range), repr(row.range_rate)])
        written.append(rel_path)
    return written
