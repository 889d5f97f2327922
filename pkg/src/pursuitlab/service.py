"""Live-session server for human piloting.

Exposes episodes over HTTP + WebSocket: create a session, start it, and
the engine advances one decision tick per wall-clock period, applying
the most recently submitted action (last-write-wins within a tick,
coast when nothing was submitted). Every tick is pushed to stream
subscribers and recorded, so finished human sessions yield gameplay
logs schema-identical to bot logs and replayable through the episode
engine.
"""

from __future__ import annotations

import asyncio
import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .datasets import GameplayLog, LogSample, log_to_dict
from .episode import (
    ALL_NONE,
    Action,
    Episode,
    EpisodeConfig,
    Observation,
    action_from_dict,
    compute_score,
    config_from_dict,
    observation_to_dict,
)

_DONE = object()  # queue sentinel after the final message


@dataclass
class Session:
    """One live episode plus its recording buffer and subscribers."""

    id: str
    config: EpisodeConfig
    pace_factor: float
    episode: Episode
    status: str = "created"  # created -> running -> done
    pending_action: Action = ALL_NONE
    samples: list[LogSample] = field(default_factory=list)
    result_payload: dict | None = None
    subscribers: list[asyncio.Queue] = field(default_factory=list)
    task: asyncio.Task | None = None

    def broadcast(self, message) -> None:
        for queue in list(self.subscribers):
            queue.put_nowait(message)


def _result_to_dict(result) -> dict:
    return {
        "closest_distance": result.closest_distance,
        "speed_at_closest": result.speed_at_closest,
        "fuel_used": result.fuel_used,
        "elapsed": result.elapsed,
        "score": result.score,
        "termination_reason": result.termination_reason,
        "seed": result.seed,
    }


def _state_message(session: Session, tick: int, obs: Observation) -> dict:
    episode = session.episode
    fuel_used = session.config.propellant - obs.vehicle_propellant
    closest = episode.closest_so_far
    speed = episode.speed_at_closest_so_far
    return {
        "type": "state",
        "tick": tick,
        "observation": observation_to_dict(obs),
        "prograde": observation_to_dict(obs)["prograde"],
        "range": obs.range,
        "range_rate": obs.range_rate,
        "propellant": obs.vehicle_propellant,
        "score": {
            "closest_distance": closest,
            "speed_at_closest": speed,
            "fuel_used": fuel_used,
            "elapsed": obs.time_elapsed,
            "total": compute_score(
                closest, speed, fuel_used, obs.time_elapsed, session.config.score_weights
            ),
        },
    }


async def _run_session(session: Session, log_dir: Path | None) -> None:
    episode = session.episode
    obs = episode.reset()
    tick = 0
    period_wall = session.config.decision_period * session.pace_factor
    deadline = time.monotonic()
    done = False
    while not done:
        session.broadcast(_state_message(session, tick, obs))
        deadline += period_wall
        delay = deadline - time.monotonic()
        if delay > 0:
            await asyncio.sleep(delay)
        action = session.pending_action
        session.pending_action = ALL_NONE  # consumed: each tick needs a fresh command
        session.samples.append(LogSample(observation=obs, action=action))
        obs, done = episode.step(action)
        tick += 1

    result = episode.result()
    session.result_payload = _result_to_dict(result)
    session.status = "done"
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
        path = log_dir / f"session_{session.id}.json"
        path.write_text(json.dumps(log_to_dict(session_log(session))), encoding="utf-8")
    session.broadcast(
        {
            "type": "done",
            "tick": tick,
            "result": session.result_payload,
            "termination_reason": result.termination_reason,
        }
    )
    session.broadcast(_DONE)


def session_log(session: Session) -> GameplayLog:
    """The session's recording as a replayable gameplay log."""
    return GameplayLog(
        config=session.config,
        agent_kind="human",
        agent_params={"session_id": session.id, "pace_factor": session.pace_factor},
        samples=tuple(session.samples),
        partial=session.status != "done",
    )


def create_app(log_dir: str | Path | None = None, static_dir: str | Path | None = None) -> FastAPI:
    """Build the session-server app. static_dir serves the pilot console."""
    app = FastAPI(title="pursuitlab mission service")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    resolved_log_dir = Path(log_dir) if log_dir is not None else None

    def _get(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.post("/sessions")
    async def create_session(body: dict | None = None):
        body = dict(body or {})
        pace_factor = float(body.pop("pace_factor", 1.0))
        if not pace_factor > 0.0:
            raise HTTPException(status_code=400, detail="pace_factor must be positive")
        try:
            config = config_from_dict(body)
        except (ValueError, TypeError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid config: {exc}")
        session = Session(
            id=uuid.uuid4().hex,
            config=config,
            pace_factor=pace_factor,
            episode=Episode(config),
        )
        sessions[session.id] = session
        return {"id": session.id}

    @app.post("/sessions/{session_id}/start")
    async def start_session(session_id: str):
        session = _get(session_id)
        if session.status != "created":
            raise HTTPException(status_code=409, detail=f"session is {session.status}")
        session.status = "running"
        session.task = asyncio.create_task(_run_session(session, resolved_log_dir))
        return {"id": session.id, "status": session.status}

    @app.post("/sessions/{session_id}/action")
    async def submit_action(session_id: str, body: dict):
        session = _get(session_id)
        if session.status != "running":
            raise HTTPException(status_code=409, detail=f"session is {session.status}")
        try:
            session.pending_action = action_from_dict(body)
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid action: {exc}")
        return {"ok": True}

    @app.get("/sessions/{session_id}/result")
    async def get_result(session_id: str):
        session = _get(session_id)
        if session.status != "done" or session.result_payload is None:
            raise HTTPException(status_code=409, detail=f"session is {session.status}")
        return session.result_payload

    @app.get("/sessions/{session_id}/log")
    async def get_log(session_id: str):
        session = _get(session_id)
        if session.status != "done":
            raise HTTPException(status_code=409, detail=f"session is {session.status}")
        return log_to_dict(session_log(session))

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        session = sessions.get(session_id)
        if session is None:
            await websocket.close(code=1008)
            return
        await websocket.accept()
        if session.status == "done":
            # Late subscriber: the live frames are gone, send the summary.
            await websocket.send_text(
                json.dumps({"type": "done", "tick": -1, "result": session.result_payload,
                            "termination_reason": session.result_payload["termination_reason"]})
            )
            await websocket.close()
            return
        queue: asyncio.Queue = asyncio.Queue()
        session.subscribers.append(queue)
        try:
            while True:
                message = await queue.get()
                if message is _DONE:
                    break
                await websocket.send_text(json.dumps(message))
        except WebSocketDisconnect:
            pass
        finally:
            if queue in session.subscribers:
                session.subscribers.remove(queue)
            try:
                await websocket.close()
            except RuntimeError:
                pass

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app
