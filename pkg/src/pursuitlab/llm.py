"""Language-model pilot harness.

Builds chat prompts from observations (plain, prograde-augmented, or
few-shot with step-by-step reasoning), keeps a sliding window of past
exchanges, calls a chat-completion backend, and parses the reply into a
throttle Action with classified failure handling. Three interchangeable
backends: a remote HTTP client speaking the common chat-completions
wire format, a deterministic scripted mock, and an oracle adapter that
wraps the scripted expert pilot.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass

import httpx

from .episode import (
    ALL_NONE,
    Action,
    DT_LABELS,
    FT_LABELS,
    Observation,
    RT_LABELS,
    action_to_dict,
)
from .navball import DEFAULT_NAVBALL_PARAMS, NavballParams, navball_action


class AgentFailure(Exception):
    """Base for classified agent failures (parse or transport)."""

    def __init__(self, category: str, message: str = ""):
        super().__init__(message or category)
        self.category = category


class ActionParseError(AgentFailure):
    """The reply yielded no extractable action."""


class CompletionError(AgentFailure):
    """The completion backend failed (timeout, protocol, auth)."""


@dataclass(frozen=True)
class ChatMessage:
    """One chat turn. function_call is only meaningful on assistant turns."""

    role: str
    content: str = ""
    function_call: dict | None = None

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.function_call is not None and self.role != "assistant":
            raise ValueError("function_call is only valid on assistant messages")


# Declared to the model on every call; enumerations mirror the Action labels.
PERFORM_ACTION_SCHEMA: dict = {
    "name": "perform_action",
    "description": "Set the discrete throttle for each translation axis.",
    "parameters": {
        "type": "object",
        "properties": {
            "ft": {"type": "string", "enum": list(FT_LABELS)},
            "rt": {"type": "string", "enum": list(RT_LABELS)},
            "dt": {"type": "string", "enum": list(DT_LABELS)},
        },
        "required": ["ft", "rt", "dt"],
    },
}

COT_SUFFIX = "Reason step-by-step."
QUESTION = "what is the best throttle to capture evader?"
PADDING_TEXT = "N/A"

_SYSTEM_CORE = (
    "You operate as an autonomous agent controlling a pursuit spacecraft. "
    "Your goal is to apply throttles to capture the evader given the positions "
    "and velocities of the pursuer and evader in celestial body reference frame{extra}. "
    "Throttles must be given in your vessel reference frame wherein the x axis points "
    "to the right, the y axis points towards the target and the z axis points upwards. "
    "The maximum throttle is 1. "
)
_PROGRADE_CLAUSE = (
    "and the direction of pursuer's velocity relative to evader or prograde"
)

EXEMPLAR_USER = (
    "Given these observations {time: 137.50 s; vehicle mass: 1924.31 kg; "
    "vehicle propellant: 924.31 kg; "
    "pursuer position [m]: [721346.21, 201998.03, 40945.33]; "
    "pursuer velocity [m/s]: [-585.14, 2087.19, 412.77]; "
    "evader position [m]: [721512.74, 202284.32, 41033.69]; "
    "evader velocity [m/s]: [-586.70, 2086.54, 412.60]; "
    "prograde: [0.118, -0.856, -0.503]}, "
    + QUESTION
)
EXEMPLAR_ASSISTANT = (
    "The x coordinate of prograde is positive, indicating that pursuer is moving to "
    "the right. The y coordinate of prograde is negative, indicating that pursuer is "
    "moving away from the target. The z coordinate of prograde is negative, indicating "
    "that pursuer is moving down. To capture the evader we should counteract pursuer's "
    "motion, moving in the opposite direction in the x axis, towards the target in the "
    "y axis, and in the opposite direction in the z axis. This means we should apply "
    "throttles to move left, forward and up. Therefore we should call "
    'perform_action({"ft": "forward", "rt": "left", "dt": "up"}).'
)


@dataclass(frozen=True)
class PromptTemplate:
    """System text plus flags shaping the live user prompt."""

    system_text: str
    include_prograde: bool = True
    exemplar_user: str | None = None
    exemplar_assistant: str | None = None
    include_cot_suffix: bool = False


def plain_template() -> PromptTemplate:
    return PromptTemplate(
        system_text=_SYSTEM_CORE.format(extra="")
        + "After reasoning call the perform_action function.",
        include_prograde=False,
    )


def augmented_template() -> PromptTemplate:
    return PromptTemplate(
        system_text=_SYSTEM_CORE.format(extra=" " + _PROGRADE_CLAUSE)
        + "After reasoning call the perform_action function.",
        include_prograde=True,
    )


def cot_fewshot_template() -> PromptTemplate:
    return PromptTemplate(
        system_text=_SYSTEM_CORE.format(extra=" " + _PROGRADE_CLAUSE)
        + COT_SUFFIX + " After reasoning call the perform_action function.",
        include_prograde=True,
        exemplar_user=EXEMPLAR_USER,
        exemplar_assistant=EXEMPLAR_ASSISTANT,
        include_cot_suffix=True,
    )


PROMPT_MODES = ("plain", "augmented", "cot-fewshot")


def template_for_mode(mode: str) -> PromptTemplate:
    if mode == "plain":
        return plain_template()
    if mode == "augmented":
        return augmented_template()
    if mode == "cot-fewshot":
        return cot_fewshot_template()
    raise ValueError(f"prompting mode must be one of {PROMPT_MODES}, got {mode!r}")


def _fmt_vec(v) -> str:
    return f"[{v.x:.2f}, {v.y:.2f}, {v.z:.2f}]"


def serialize_observation(obs: Observation, include_prograde: bool = True) -> str:
    """Fixed-order, fixed-decimal rendering of an observation.

    Two decimals for scalars and positions/velocities keeps token counts
    stable; the prograde unit vector gets three. Exported datasets use
    this same text so train and inference distributions match.
    """
    parts = [
        f"time: {obs.time_elapsed:.2f} s",
        f"vehicle mass: {obs.vehicle_mass:.2f} kg",
        f"vehicle propellant: {obs.vehicle_propellant:.2f} kg",
        f"pursuer position [m]: {_fmt_vec(obs.pursuer_pos)}",
        f"pursuer velocity [m/s]: {_fmt_vec(obs.pursuer_vel)}",
        f"evader position [m]: {_fmt_vec(obs.evader_pos)}",
        f"evader velocity [m/s]: {_fmt_vec(obs.evader_vel)}",
    ]
    if include_prograde:
        if obs.prograde is not None:
            parts.append(
                f"prograde: [{obs.prograde.x:.3f}, {obs.prograde.y:.3f}, {obs.prograde.z:.3f}]"
            )
        else:
            parts.append("prograde: unavailable (no relative motion)")
    return "; ".join(parts)


def live_question(obs: Observation, template: PromptTemplate) -> str:
    return (
        f"Given these observations {{{serialize_observation(obs, template.include_prograde)}}}, "
        + QUESTION
    )


class SlidingWindow:
    """Last-n user/assistant exchanges, zero-padded when rendered."""

    def __init__(self, capacity: int, padded: bool = True):
        if capacity < 0:
            raise ValueError("window capacity must be non-negative")
        self.capacity = capacity
        self.padded = padded
        self._exchanges: list[tuple[str, str]] = []

    def append(self, user_text: str, assistant_text: str) -> None:
        if self.capacity == 0:
            return
        self._exchanges.append((user_text, assistant_text))
        if len(self._exchanges) > self.capacity:
            del self._exchanges[: len(self._exchanges) - self.capacity]

    def __len__(self) -> int:
        return len(self._exchanges)

    def rendered(self) -> list[tuple[str, str]]:
        """Oldest-first exchanges, front-padded with placeholders to capacity."""
        if not self.padded:
            return list(self._exchanges)
        pad = self.capacity - len(self._exchanges)
        return [(PADDING_TEXT, PADDING_TEXT)] * pad + list(self._exchanges)


def build_prompts(
    obs: Observation, window: SlidingWindow, template: PromptTemplate
) -> list[ChatMessage]:
    """System message, padded history pairs, then the live user question.

    Few-shot mode inlines the exemplar exchange inside the final user
    message, ahead of the live question and the reasoning suffix.
    """
    messages = [ChatMessage("system", template.system_text)]
    for user_text, assistant_text in window.rendered():
        messages.append(ChatMessage("user", user_text))
        messages.append(ChatMessage("assistant", assistant_text))

    text = live_question(obs, template)
    if template.exemplar_user is not None:
        text = (
            f"USER: {template.exemplar_user}\n"
            f"ASSISTANT: {template.exemplar_assistant}\n\n"
            f"Now answer the following question:\n\n{text}"
        )
    if template.include_cot_suffix:
        text = f"{text} {COT_SUFFIX}"
    messages.append(ChatMessage("user", text))
    return messages


def render_call(action: Action) -> str:
    """Canonical textual form of the perform_action call for an action."""
    return (
        'perform_action({"ft": "%s", "rt": "%s", "dt": "%s"})'
        % (action.ft, action.rt, action.dt)
    )


_AXIS_KEYWORDS = (
    ("ft", ("forward", "backward")),
    ("rt", ("left", "right")),
    ("dt", ("up", "down")),
)
_VALID_LABELS = {"ft": FT_LABELS, "rt": RT_LABELS, "dt": DT_LABELS}


def _last_sentence(text: str) -> str:
    segments = [s.strip() for s in re.split(r"[.!?\n]+", text)]
    segments = [s for s in segments if s]
    return segments[-1] if segments else text


def parse_action(reply: ChatMessage) -> Action:
    """Extract an Action from an assistant reply.

    Prefers a well-formed perform_action function call; otherwise scans
    the final sentence for one directional keyword per axis (a lone
    "none" keyword is an explicit coast). Anything else raises
    ActionParseError with a category: bad-function, bad-arguments,
    unknown-label, ambiguous, or no-action.
    """
    if reply.role != "assistant":
        raise ActionParseError("no-action", "reply is not an assistant message")

    if reply.function_call is not None:
        call = reply.function_call
        if call.get("name") != "perform_action":
            raise ActionParseError("bad-function", f"unexpected function {call.get('name')!r}")
        args = call.get("arguments", {})
        if isinstance(args, str):
            try:
                args = json.loads(args)
            except json.JSONDecodeError as exc:
                raise ActionParseError("bad-arguments", "arguments are not valid JSON") from exc
        if not isinstance(args, dict):
            raise ActionParseError("bad-arguments", "arguments must be an object")
        labels = {}
        for axis, valid in _VALID_LABELS.items():
            value = args.get(axis, "none")
            if not isinstance(value, str) or value.lower() not in valid:
                raise ActionParseError("unknown-label", f"{axis}={value!r}")
            labels[axis] = value.lower()
        return Action(**labels)

    sentence = _last_sentence(reply.content or "")
    if not sentence:
        raise ActionParseError("no-action", "empty reply")
    found: dict[str, str | None] = {}
    for axis, keywords in _AXIS_KEYWORDS:
        hits = [kw for kw in keywords if re.search(rf"\b{kw}\b", sentence, re.IGNORECASE)]
        if len(hits) > 1:
            raise ActionParseError("ambiguous", f"both {hits[0]} and {hits[1]} on {axis}")
        found[axis] = hits[0] if hits else None
    if all(v is None for v in found.values()):
        if re.search(r"\bnone\b", sentence, re.IGNORECASE):
            return ALL_NONE
        raise ActionParseError("no-action", "no directional keywords in the final sentence")
    return Action(
        ft=found["ft"] or "none", rt=found["rt"] or "none", dt=found["dt"] or "none"
    )


@dataclass(frozen=True)
class AgentConfig:
    """Endpoint, prompting, and failure-handling knobs for the LLM pilot."""

    endpoint: str = "http://localhost:8080/v1/chat/completions"
    model: str = "local-pilot"
    timeout: float = 30.0
    temperature: float | None = None
    window_size: int = 0
    mode: str = "augmented"
    default_action: Action = ALL_NONE
    retry_wait: float = 1.0
    api_key_env: str = "LLM_API_KEY"

    def __post_init__(self) -> None:
        if not self.timeout > 0.0:
            raise ValueError("timeout must be positive")
        if self.window_size < 0:
            raise ValueError("window_size must be non-negative")
        if self.retry_wait < 0.0:
            raise ValueError("retry_wait must be non-negative")
        if self.mode not in PROMPT_MODES:
            raise ValueError(f"mode must be one of {PROMPT_MODES}, got {self.mode!r}")


class MockChatClient:
    """Scripted backend for tests: replies come from a fixed queue."""

    def __init__(self, replies: list[ChatMessage], cycle: bool = False):
        self._replies = list(replies)
        self._cycle = cycle
        self._index = 0
        self.calls: list[tuple[list[ChatMessage], dict]] = []

    def complete(
        self, messages: list[ChatMessage], schema: dict, observation: Observation | None = None
    ) -> ChatMessage:
        self.calls.append((list(messages), schema))
        if self._index >= len(self._replies):
            if not self._cycle or not self._replies:
                raise CompletionError("protocol", "mock reply queue exhausted")
            self._index = 0
        reply = self._replies[self._index]
        self._index += 1
        return reply


class OracleChatClient:
    """Backend that answers with the expert pilot's choice as a function call.

    Needs the live Observation (passed alongside the messages) so its
    decisions are bit-identical to driving the expert directly.
    """

    def __init__(self, params: NavballParams = DEFAULT_NAVBALL_PARAMS):
        self.params = params

    def complete(
        self, messages: list[ChatMessage], schema: dict, observation: Observation | None = None
    ) -> ChatMessage:
        if observation is None:
            raise CompletionError("protocol", "oracle backend needs the live observation")
        action = navball_action(observation, self.params)
        return ChatMessage(
            role="assistant",
            content="",
            function_call={
                "name": "perform_action",
                "arguments": {"ft": action.ft, "rt": action.rt, "dt": action.dt},
            },
        )


class HttpChatClient:
    """Remote chat-completions backend (the widely adopted JSON wire format).

    Sends messages plus the perform_action tool declaration; reads either
    tool_calls or the legacy function_call field from the first choice.
    Transport problems surface as CompletionError with a category.
    """

    def __init__(self, config: AgentConfig, client: httpx.Client | None = None):
        self._config = config
        self._client = client or httpx.Client()

    def complete(
        self, messages: list[ChatMessage], schema: dict, observation: Observation | None = None
    ) -> ChatMessage:
        cfg = self._config
        body: dict = {
            "model": cfg.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "tools": [{"type": "function", "function": schema}],
        }
        if cfg.temperature is not None:
            body["temperature"] = cfg.temperature
        headers = {}
        api_key = os.environ.get(cfg.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        try:
            response = self._client.post(
                cfg.endpoint, json=body, headers=headers, timeout=cfg.timeout
            )
        except httpx.TimeoutException as exc:
            raise CompletionError("timeout", str(exc)) from exc
        except httpx.HTTPError as exc:
            raise CompletionError("protocol", str(exc)) from exc

        if response.status_code in (401, 403):
            raise CompletionError("auth", f"endpoint returned {response.status_code}")
        if response.status_code != 200:
            raise CompletionError("protocol", f"endpoint returned {response.status_code}")
        try:
            payload = response.json()
            message = payload["choices"][0]["message"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise CompletionError("protocol", "malformed completion payload") from exc

        function_call = None
        tool_calls = message.get("tool_calls")
        if tool_calls:
            function_call = {
                "name": tool_calls[0].get("function", {}).get("name"),
                "arguments": tool_calls[0].get("function", {}).get("arguments", "{}"),
            }
        elif message.get("function_call"):
            function_call = {
                "name": message["function_call"].get("name"),
                "arguments": message["function_call"].get("arguments", "{}"),
            }
        return ChatMessage(
            role="assistant", content=message.get("content") or "", function_call=function_call
        )


def _message_to_dict(m: ChatMessage) -> dict:
    return {"role": m.role, "content": m.content, "function_call": m.function_call}


class LLMAgent:
    """Per-episode pilot: one window, one failure ledger, one backend."""

    def __init__(self, config: AgentConfig, client, template: PromptTemplate | None = None):
        self.config = config
        self.client = client
        self.template = template or template_for_mode(config.mode)
        self.window = SlidingWindow(config.window_size)
        self.attempts = 0
        self.failures = 0
        self.latencies_ms: list[float] = []
        self.interactions: list[dict] = []
        self._tick = 0

    @property
    def failure_rate(self) -> float:
        return self.failures / self.attempts if self.attempts else 0.0

    def _log(self, messages, reply, action, latency_ms, outcome) -> None:
        self.interactions.append(
            {
                "tick": self._tick,
                "latency_ms": latency_ms,
                "outcome": outcome,
                "prompts": [_message_to_dict(m) for m in messages],
                "reply": _message_to_dict(reply) if reply is not None else None,
                "action": action_to_dict(action) if action is not None else None,
            }
        )

    def _fail(self, messages, reply, latency_ms, category: str) -> Action:
        self.failures += 1
        self.latencies_ms.append(latency_ms)
        self._log(messages, reply, None, latency_ms, outcome=f"failure:{category}")
        self._tick += 1
        if self.config.retry_wait > 0.0:
            time.sleep(self.config.retry_wait)
        return self.config.default_action

    def get_action(self, obs: Observation) -> Action:
        messages = build_prompts(obs, self.window, self.template)
        self.attempts += 1
        start = time.perf_counter()
        try:
            reply = self.client.complete(messages, PERFORM_ACTION_SCHEMA, observation=obs)
        except AgentFailure as failure:
            return self._fail(messages, None, (time.perf_counter() - start) * 1000.0, failure.category)
        except Exception:
            return self._fail(messages, None, (time.perf_counter() - start) * 1000.0, "internal")
        latency_ms = (time.perf_counter() - start) * 1000.0

        try:
            action = parse_action(reply)
        except AgentFailure as failure:
            return self._fail(messages, reply, latency_ms, failure.category)
        except Exception:
            return self._fail(messages, reply, latency_ms, "internal")

        self.latencies_ms.append(latency_ms)
        assistant_text = reply.content or render_call(action)
        self.window.append(live_question(obs, self.template), assistant_text)
        self._log(messages, reply, action, latency_ms, outcome="success")
        self._tick += 1
        return action


def write_interaction_log(agent: LLMAgent, path) -> None:
    """Dump the agent's interaction records as UTF-8 JSONL."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in agent.interactions:
            fh.write(json.dumps(record) + "\n")
