"""Desk-scale pursuit-evasion orbital rendezvous laboratory."""

from .datasets import (
    GameplayLog,
    annotate_cot,
    build_records,
    load_log,
    lookahead,
    record_episode,
    replay_log,
    save_log,
    to_alpaca,
    to_chat_jsonl,
    windowed,
)
from .episode import (
    ALL_NONE,
    Action,
    Episode,
    EpisodeConfig,
    EpisodeResult,
    NaiveAgent,
    Observation,
    ScoreWeights,
    action_to_throttle,
    compute_score,
    evader_policy_e3,
    run_episode,
)
from .evaluation import (
    CampaignReport,
    action_accuracy,
    cross_entropy,
    export_trajectories,
    make_agent_factory,
    run_campaign,
)
from .llm import (
    AgentConfig,
    ChatMessage,
    HttpChatClient,
    LLMAgent,
    MockChatClient,
    OracleChatClient,
    SlidingWindow,
    build_prompts,
    parse_action,
)
from .navball import NavballAgent, NavballParams, braking_distance, navball_action
from .orbit import (
    KERBIN,
    BodyConstants,
    EngineParams,
    FrameBasis,
    OrbitConstraints,
    OrbitalElements,
    Vec3,
    VesselState,
    compute_prograde,
    elements_to_state,
    generate_orbit,
    propagate,
    state_to_elements,
    vessel_frame,
)
from .service import create_app

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
