"""LLM pilot harness: prompts, window, parsing, clients, failure paths."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pursuitlab.episode import ALL_NONE, Action, EpisodeConfig, run_episode
from pursuitlab.llm import (
    COT_SUFFIX,
    EXEMPLAR_ASSISTANT,
    PADDING_TEXT,
    PERFORM_ACTION_SCHEMA,
    ActionParseError,
    AgentConfig,
    AgentFailure,
    ChatMessage,
    CompletionError,
    HttpChatClient,
    LLMAgent,
    MockChatClient,
    OracleChatClient,
    SlidingWindow,
    build_prompts,
    cot_fewshot_template,
    parse_action,
    plain_template,
    render_call,
    serialize_observation,
    template_for_mode,
)
from pursuitlab.navball import NavballAgent
from pursuitlab.orbit import Vec3
from pursuitlab.episode import Observation


def sample_obs(prograde=(0.1, 0.9, -0.2)) -> Observation:
    return Observation(
        time_elapsed=12.5,
        vehicle_mass=1987.25,
        vehicle_propellant=987.25,
        pursuer_pos=Vec3(721346.214, 201998.031, 40945.333),
        pursuer_vel=Vec3(-585.141, 2087.192, 412.774),
        evader_pos=Vec3(721512.74, 202284.32, 41033.69),
        evader_vel=Vec3(-586.7, 2086.54, 412.6),
        prograde=Vec3(*prograde) if prograde else None,
        range=350.0,
        range_rate=-4.2,
    )


FIG_CALL = ChatMessage(
    role="assistant",
    content="",
    function_call={"name": "perform_action", "arguments": {"ft": "forward", "rt": "left", "dt": "up"}},
)


class TestSerializeObservation:
    def test_fixed_order_and_decimals(self):
        text = serialize_observation(sample_obs())
        assert text.startswith("time: 12.50 s; vehicle mass: 1987.25 kg")
        assert "pursuer position [m]: [721346.21, 201998.03, 40945.33]" in text
        assert text.endswith("prograde: [0.100, 0.900, -0.200]")

    def test_without_prograde(self):
        text = serialize_observation(sample_obs(), include_prograde=False)
        assert "prograde" not in text

    def test_missing_prograde_notes_no_relative_motion(self):
        text = serialize_observation(sample_obs(prograde=None))
        assert text.endswith("prograde: unavailable (no relative motion)")


class TestBuildPrompts:
    def test_window_zero_is_system_plus_user(self):
        messages = build_prompts(sample_obs(), SlidingWindow(0), plain_template())
        assert [m.role for m in messages] == ["system", "user"]
        assert "what is the best throttle to capture evader?" in messages[-1].content

    def test_cot_final_user_contains_exemplar_and_suffix(self):
        messages = build_prompts(sample_obs(), SlidingWindow(0), cot_fewshot_template())
        final = messages[-1].content
        assert EXEMPLAR_ASSISTANT in final
        assert final.endswith(COT_SUFFIX)
        assert "Now answer the following question:" in final

    def test_window_padding_order_oldest_first(self):
        window = SlidingWindow(3)
        window.append("past question", "past answer")
        messages = build_prompts(sample_obs(), window, plain_template())
        # system + 3 padded exchanges + live user
        assert len(messages) == 1 + 6 + 1
        assert messages[1].content == PADDING_TEXT
        assert messages[2].content == PADDING_TEXT
        assert messages[3].content == PADDING_TEXT
        assert messages[4].content == PADDING_TEXT
        assert messages[5].content == "past question"
        assert messages[6].content == "past answer"

    def test_plain_mode_omits_prograde(self):
        messages = build_prompts(sample_obs(), SlidingWindow(0), plain_template())
        assert "prograde" not in messages[-1].content


class TestSlidingWindow:
    def test_capacity_bound_evicts_oldest(self):
        window = SlidingWindow(2)
        for k in range(5):
            window.append(f"q{k}", f"a{k}")
        assert len(window) == 2
        assert window.rendered() == [("q3", "a3"), ("q4", "a4")]

    def test_padded_length_is_exactly_capacity(self):
        window = SlidingWindow(4)
        window.append("q", "a")
        assert len(window.rendered()) == 4

    def test_zero_capacity_keeps_nothing(self):
        window = SlidingWindow(0)
        window.append("q", "a")
        assert window.rendered() == []

    def test_negative_capacity_rejected(self):
        with pytest.raises(ValueError):
            SlidingWindow(-1)


class TestParseAction:
    def test_function_call(self):
        assert parse_action(FIG_CALL) == Action(ft="forward", rt="left", dt="up")

    def test_function_call_with_string_arguments(self):
        reply = ChatMessage(
            role="assistant",
            function_call={"name": "perform_action", "arguments": '{"ft": "backward"}'},
        )
        assert parse_action(reply) == Action(ft="backward")

    def test_free_text_fallback(self):
        reply = ChatMessage(
            role="assistant",
            content="The pursuer is drifting. We should apply throttles to move left, forward and up",
        )
        assert parse_action(reply) == Action(ft="forward", rt="left", dt="up")

    def test_rendered_call_round_trips(self):
        for action in (Action(ft="forward", rt="left", dt="up"), ALL_NONE, Action(dt="down")):
            reply = ChatMessage(role="assistant", content="Reasoning. " + render_call(action))
            assert parse_action(reply).labels() == action.labels()

    def test_unparseable_text_is_classified(self):
        with pytest.raises(ActionParseError) as err:
            parse_action(ChatMessage(role="assistant", content="I cannot determine it."))
        assert err.value.category == "no-action"

    def test_contradictory_keywords_fail(self):
        reply = ChatMessage(role="assistant", content="Move left and also right now")
        with pytest.raises(ActionParseError) as err:
            parse_action(reply)
        assert err.value.category == "ambiguous"

    def test_only_last_sentence_is_scanned(self):
        reply = ChatMessage(
            role="assistant",
            content="Earlier we thought about moving right and down. Final: move left, forward and up",
        )
        assert parse_action(reply) == Action(ft="forward", rt="left", dt="up")

    def test_unknown_label_in_call_fails(self):
        reply = ChatMessage(
            role="assistant",
            function_call={"name": "perform_action", "arguments": {"ft": "sideways"}},
        )
        with pytest.raises(ActionParseError) as err:
            parse_action(reply)
        assert err.value.category == "unknown-label"

    def test_wrong_function_name_fails(self):
        reply = ChatMessage(
            role="assistant", function_call={"name": "self_destruct", "arguments": {}}
        )
        with pytest.raises(ActionParseError) as err:
            parse_action(reply)
        assert err.value.category == "bad-function"

    def test_malformed_argument_json_fails(self):
        reply = ChatMessage(
            role="assistant", function_call={"name": "perform_action", "arguments": "{nope"}
        )
        with pytest.raises(ActionParseError) as err:
            parse_action(reply)
        assert err.value.category == "bad-arguments"

    def test_explicit_none_coasts(self):
        reply = ChatMessage(role="assistant", content="Best to do nothing: none")
        assert parse_action(reply) == ALL_NONE

    @settings(max_examples=300, deadline=None)
    @given(st.text(max_size=200))
    def test_arbitrary_text_never_escapes_classification(self, text):
        try:
            action = parse_action(ChatMessage(role="assistant", content=text))
        except AgentFailure as failure:
            assert failure.category
        else:
            assert action.ft in ("backward", "none", "forward")
            assert action.rt in ("left", "none", "right")
            assert action.dt in ("down", "none", "up")


class TestAgentLoop:
    def config(self, **overrides):
        defaults = dict(retry_wait=0.0, window_size=3, mode="augmented")
        defaults.update(overrides)
        return AgentConfig(**defaults)

    def test_scripted_call_returns_action_and_grows_window(self):
        agent = LLMAgent(self.config(), MockChatClient([FIG_CALL]))
        action = agent.get_action(sample_obs())
        assert action == Action(ft="forward", rt="left", dt="up")
        assert len(agent.window) == 1
        assert agent.attempts == 1 and agent.failures == 0
        assert len(agent.latencies_ms) == 1
        assert agent.interactions[0]["outcome"] == "success"

    def test_malformed_reply_returns_default_after_wait(self):
        bad = ChatMessage(role="assistant", content="garbled nonsense")
        agent = LLMAgent(self.config(retry_wait=0.05), MockChatClient([bad]))
        start = time.perf_counter()
        action = agent.get_action(sample_obs())
        waited = time.perf_counter() - start
        assert action == ALL_NONE
        assert waited >= 0.045
        assert agent.failures == 1
        assert agent.interactions[0]["outcome"] == "failure:no-action"
        assert len(agent.window) == 0

    def test_transport_failure_is_classified_and_counted(self):
        agent = LLMAgent(self.config(), MockChatClient([]))  # exhausted queue
        action = agent.get_action(sample_obs())
        assert action == ALL_NONE
        assert agent.failures == 1
        assert agent.interactions[0]["outcome"] == "failure:protocol"
        assert len(agent.latencies_ms) == 1

    def test_oracle_backend_reproduces_expert_episode_bitwise(self):
        for seed in (0, 6):
            cfg = EpisodeConfig(seed=seed, max_duration=30.0)
            direct = run_episode(NavballAgent(), cfg)
            agent = LLMAgent(self.config(), OracleChatClient())
            via_llm = run_episode(agent, cfg)
            assert via_llm == direct
            assert agent.failures == 0
            assert agent.attempts == 60

    def test_every_attempt_has_a_latency_record(self):
        replies = [FIG_CALL, ChatMessage(role="assistant", content="???"), FIG_CALL]
        agent = LLMAgent(self.config(), MockChatClient(replies))
        for _ in range(3):
            agent.get_action(sample_obs())
        assert len(agent.latencies_ms) == 3
        assert agent.attempts == 3
        assert agent.failures == 1
        assert agent.failure_rate == pytest.approx(1.0 / 3.0)

    def test_interaction_log_round_trips_as_jsonl(self, tmp_path):
        from pursuitlab.llm import write_interaction_log

        replies = [FIG_CALL, ChatMessage(role="assistant", content="???")]
        agent = LLMAgent(self.config(), MockChatClient(replies))
        agent.get_action(sample_obs())
        agent.get_action(sample_obs())
        path = tmp_path / "interactions.jsonl"
        write_interaction_log(agent, path)
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert [r["tick"] for r in records] == [0, 1]
        assert records[0]["outcome"] == "success"
        assert records[1]["outcome"] == "failure:no-action"
        for record in records:
            assert {"tick", "latency_ms", "outcome", "prompts", "reply", "action"} <= set(record)


class _StubHandler(BaseHTTPRequestHandler):
    captured: list[dict] = []
    status = 200
    reply_body: dict = {
        "choices": [
            {
                "message": {
                    "role": "assistant",
                    "content": None,
                    "tool_calls": [
                        {
                            "type": "function",
                            "function": {
                                "name": "perform_action",
                                "arguments": '{"ft": "forward", "rt": "none", "dt": "none"}',
                            },
                        }
                    ],
                }
            }
        ]
    }

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        _StubHandler.captured.append(
            {"path": self.path, "body": body, "auth": self.headers.get("Authorization")}
        )
        payload = json.dumps(self.reply_body).encode()
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    _StubHandler.captured = []
    _StubHandler.status = 200
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()
    thread.join(timeout=2)


class TestHttpChatClient:
    def test_request_carries_schema_verbatim_and_parses_tool_call(self, stub_server, monkeypatch):
        monkeypatch.setenv("LLM_API_KEY", "secret-key")
        config = AgentConfig(endpoint=stub_server, model="pilot-1", temperature=0.2)
        client = HttpChatClient(config)
        messages = build_prompts(sample_obs(), SlidingWindow(0), template_for_mode("augmented"))
        reply = client.complete(messages, PERFORM_ACTION_SCHEMA)

        sent = _StubHandler.captured[0]
        assert sent["body"]["tools"][0]["function"] == PERFORM_ACTION_SCHEMA
        assert sent["body"]["model"] == "pilot-1"
        assert sent["body"]["temperature"] == 0.2
        assert sent["auth"] == "Bearer secret-key"
        assert [m["role"] for m in sent["body"]["messages"]] == ["system", "user"]
        assert parse_action(reply) == Action(ft="forward")

    def test_auth_error_classified(self, stub_server):
        _StubHandler.status = 401
        client = HttpChatClient(AgentConfig(endpoint=stub_server))
        with pytest.raises(CompletionError) as err:
            client.complete([ChatMessage("user", "hi")], PERFORM_ACTION_SCHEMA)
        assert err.value.category == "auth"

    def test_unreachable_endpoint_is_protocol_failure(self):
        client = HttpChatClient(AgentConfig(endpoint="http://127.0.0.1:9/nothing", timeout=0.5))
        with pytest.raises(CompletionError) as err:
            client.complete([ChatMessage("user", "hi")], PERFORM_ACTION_SCHEMA)
        assert err.value.category in ("protocol", "timeout")


class TestConfigValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            AgentConfig(timeout=0.0)
        with pytest.raises(ValueError):
            AgentConfig(window_size=-1)
        with pytest.raises(ValueError):
            AgentConfig(mode="zero-shot")

    def test_schema_enums_match_action_labels(self):
        props = PERFORM_ACTION_SCHEMA["parameters"]["properties"]
        assert tuple(props["ft"]["enum"]) == ("backward", "none", "forward")
        assert tuple(props["rt"]["enum"]) == ("left", "none", "right")
        assert tuple(props["dt"]["enum"]) == ("down", "none", "up")
