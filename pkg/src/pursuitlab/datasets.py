"""Gameplay recording and fine-tuning dataset exports.

Records (observation, action) pairs at the decision cadence from any
agent, replays logs deterministically through the episode engine, and
exports chat-JSONL and Alpaca instruction records with sliding-window,
look-ahead, and synthetic step-by-step-reasoning variants. All exports
are pure transforms: identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path

from .episode import (
    Action,
    Agent,
    Episode,
    EpisodeConfig,
    EpisodeResult,
    Observation,
    action_from_dict,
    action_to_dict,
    config_from_dict,
    config_to_dict,
    observation_from_dict,
    observation_to_dict,
)
from .llm import (
    PADDING_TEXT,
    PromptTemplate,
    augmented_template,
    live_question,
    render_call,
)
from .orbit import Vec3


@dataclass(frozen=True)
class LogSample:
    """One decision tick: the observation the agent saw and its action."""

    observation: Observation
    action: Action


@dataclass(frozen=True)
class GameplayLog:
    """An episode's decision-tick record plus enough metadata to replay it."""

    config: EpisodeConfig
    agent_kind: str
    agent_params: dict
    samples: tuple[LogSample, ...]
    partial: bool = False

    @property
    def seed(self) -> int:
        return self.config.seed

    def validate(self) -> None:
        """Check cadence and label closure; raises ValueError on violation."""
        period = self.config.decision_period
        for k, sample in enumerate(self.samples):
            if sample.observation.time_elapsed != k * period:
                raise ValueError(
                    f"sample {k} at t={sample.observation.time_elapsed}, expected {k * period}"
                )


def record_episode(
    agent: Agent,
    config: EpisodeConfig,
    agent_kind: str = "unknown",
    agent_params: dict | None = None,
) -> GameplayLog:
    """Run one episode, sampling every decision tick.

    If the agent or engine fails mid-run the samples gathered so far are
    returned as a well-formed log flagged partial.
    """
    episode = Episode(config)
    samples: list[LogSample] = []
    partial = False
    try:
        obs = episode.reset()
        done = False
        while not done:
            action = agent.get_action(obs)
            samples.append(LogSample(observation=obs, action=action))
            obs, done = episode.step(action)
    except Exception:
        partial = True
    return GameplayLog(
        config=config,
        agent_kind=agent_kind,
        agent_params=dict(agent_params or {}),
        samples=tuple(samples),
        partial=partial,
    )


def replay_log(log: GameplayLog) -> EpisodeResult:
    """Re-run the logged actions through a fresh episode (seed + actions)."""
    episode = Episode(log.config)
    episode.reset()
    for sample in log.samples:
        _, done = episode.step(sample.action)
        if done:
            break
    return episode.result()


def log_to_dict(log: GameplayLog) -> dict:
    return {
        "metadata": {
            "scenario_id": log.config.scenario_id,
            "seed": log.config.seed,
            "agent_kind": log.agent_kind,
            "agent_params": log.agent_params,
            "decision_period": log.config.decision_period,
            "partial": log.partial,
            "config": config_to_dict(log.config),
        },
        "samples": [
            {
                "t": s.observation.time_elapsed,
                "observation": observation_to_dict(s.observation),
                "action": action_to_dict(s.action),
            }
            for s in log.samples
        ],
    }


def log_from_dict(payload: dict) -> GameplayLog:
    meta = payload["metadata"]
    samples = tuple(
        LogSample(
            observation=observation_from_dict(s["observation"]),
            action=action_from_dict(s["action"]),
        )
        for s in payload["samples"]
    )
    return GameplayLog(
        config=config_from_dict(meta["config"]),
        agent_kind=meta.get("agent_kind", "unknown"),
        agent_params=meta.get("agent_params", {}),
        samples=samples,
        partial=meta.get("partial", False),
    )


def save_log(log: GameplayLog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(log_to_dict(log)), encoding="utf-8")


def load_log(path: str | Path) -> GameplayLog:
    return log_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class DatasetRecord:
    """One training record plus provenance back to (episode seed, tick).

    Only system/instruction/output/history are exported; seed, tick,
    prograde, and the encoded actions are internal provenance used by
    transforms and verifiers.
    """

    system: str
    instruction: str
    output: str
    history: tuple[tuple[str, str], ...]
    seed: int
    tick: int
    prograde: Vec3 | None
    actions: tuple[Action, ...]


def build_records(
    log: GameplayLog,
    template: PromptTemplate | None = None,
    human_keyword: bool = False,
) -> list[DatasetRecord]:
    """Base export: one record per sample, no history, single-action output.

    The instruction text is exactly what the live agent would have been
    asked (same serialization); human_keyword prefixes it with the HUMAN
    conversation keyword used in exported datasets.
    """
    template = template or augmented_template()
    records = []
    for tick, sample in enumerate(log.samples):
        instruction = live_question(sample.observation, template)
        if human_keyword:
            instruction = "\nHUMAN: " + instruction
        records.append(
            DatasetRecord(
                system=template.system_text,
                instruction=instruction,
                output=render_call(sample.action),
                history=(),
                seed=log.config.seed,
                tick=tick,
                prograde=sample.observation.prograde,
                actions=(sample.action,),
            )
        )
    return records


def windowed(records: list[DatasetRecord], n: int) -> list[DatasetRecord]:
    """Attach the previous min(k, n) exchanges, zero-padded to n.

    n=0 is the identity transform.
    """
    if n < 0:
        raise ValueError("window size must be non-negative")
    if n == 0:
        return list(records)
    out = []
    for k, record in enumerate(records):
        past = [(r.instruction, r.output) for r in records[max(0, k - n):k]]
        pad = n - len(past)
        history = tuple([(PADDING_TEXT, PADDING_TEXT)] * pad + past)
        out.append(replace(record, history=history))
    return out


def lookahead(records: list[DatasetRecord], k: int) -> list[DatasetRecord]:
    """Rewrite outputs to the next k actions, newline-separated.

    The final k-1 records are dropped (insufficient future). k=1 is the
    identity transform.
    """
    if k < 1:
        raise ValueError("lookahead must be at least 1")
    if k == 1:
        return list(records)
    out = []
    for idx in range(len(records) - (k - 1)):
        future = records[idx : idx + k]
        out.append(
            replace(
                records[idx],
                output="\n".join(r.output for r in future),
                actions=tuple(a for r in future for a in r.actions),
            )
        )
    return out


_FT_WORD = {"forward": "forward", "backward": "backward"}
_RT_WORD = {"left": "left", "right": "right"}
_DT_WORD = {"up": "up", "down": "down"}

_COUNTERACT_SENTENCE = (
    "To capture the evader we should counteract pursuer's motion, moving in the "
    "opposite direction in the x axis, towards the target in the y axis, and in "
    "the opposite direction in the z axis."
)


def _sign_sentence(axis: str, value: float, positive: str, negative: str) -> str:
    if value > 0.0:
        desc = positive
    elif value < 0.0:
        desc = negative
    else:
        return f"The {axis} coordinate of prograde is zero, indicating no drift on that axis."
    sign = "positive" if value > 0.0 else "negative"
    return f"The {axis} coordinate of prograde is {sign}, indicating that pursuer is {desc}."


def reasoning_for(prograde: Vec3 | None, action: Action) -> str:
    """Template reasoning from prograde signs, ending in the throttle words."""
    if prograde is None:
        sentences = [
            "There is no relative motion between pursuer and evader, so the "
            "prograde direction is undefined."
        ]
    else:
        sentences = [
            _sign_sentence("x", prograde.x, "moving to the right", "moving to the left"),
            _sign_sentence(
                "y", prograde.y, "approaching the target", "moving away from the target"
            ),
            _sign_sentence("z", prograde.z, "moving up", "moving down"),
            _COUNTERACT_SENTENCE,
        ]
    words = []
    if action.rt != "none":
        words.append(_RT_WORD[action.rt])
    if action.ft != "none":
        words.append(_FT_WORD[action.ft])
    if action.dt != "none":
        words.append(_DT_WORD[action.dt])
    if words:
        if len(words) > 1:
            listed = ", ".join(words[:-1]) + " and " + words[-1]
        else:
            listed = words[0]
        sentences.append(f"This means we should apply throttles to move {listed}.")
    else:
        sentences.append("This means no throttle is needed right now.")
    return " ".join(sentences)


def annotate_cot(records: list[DatasetRecord]) -> list[DatasetRecord]:
    """Prefix each output with reasoning derived from the sample's prograde.

    The perform_action call stays the final sentence so the annotated
    output remains parseable.
    """
    out = []
    for record in records:
        action = record.actions[0]
        reasoning = reasoning_for(record.prograde, action)
        out.append(
            replace(
                record,
                output=f"{reasoning} Therefore we should call {record.output}.",
            )
        )
    return out


def chat_messages_for(record: DatasetRecord) -> list[dict]:
    """Chat form of one record: system, history pairs, user, assistant."""
    messages = [{"role": "system", "content": record.system}]
    for user_text, assistant_text in record.history:
        messages.append({"role": "user", "content": user_text})
        messages.append({"role": "assistant", "content": assistant_text})
    messages.append({"role": "user", "content": record.instruction})
    assistant: dict = {"role": "assistant", "content": record.output}
    if len(record.actions) == 1:
        action = record.actions[0]
        assistant["function_call"] = {
            "name": "perform_action",
            "arguments": {"ft": action.ft, "rt": action.rt, "dt": action.dt},
        }
    messages.append(assistant)
    return messages


def to_chat_jsonl(records: list[DatasetRecord], path: str | Path) -> None:
    """One chat object per line; byte-stable for identical inputs."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps({"messages": chat_messages_for(record)}) + "\n")


def to_alpaca(records: list[DatasetRecord], path: str | Path) -> None:
    """Instruction-tuning array with exactly instruction/output/system/history."""
    payload = [
        {
            "instruction": record.instruction,
            "output": record.output,
            "system": record.system,
            "history": [list(pair) for pair in record.history],
        }
        for record in records
    ]
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def iter_chat_jsonl(path: str | Path):
    """Yield the messages array of each chat-JSONL line."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)["messages"]


def split_records(
    records: list[DatasetRecord], validation_fraction: float, seed: int = 0
) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
    """Deterministic train/validation split by shuffled record index."""
    if not 0.0 <= validation_fraction < 1.0:
        raise ValueError("validation_fraction must be in [0, 1)")
    indices = list(range(len(records)))
    random.Random(seed).shuffle(indices)
    n_val = round(len(records) * validation_fraction)
    val_set = set(indices[:n_val])
    train = [r for i, r in enumerate(records) if i not in val_set]
    val = [r for i, r in enumerate(records) if i in val_set]
    return train, val
