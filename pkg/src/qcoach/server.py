"""HTTP face of the training session.

All endpoints speak JSON except the event stream, which is server-sent
events over a persistent connection. Rejected human inputs come back as
409 with the loop's reason verbatim, so the UI can surface it unchanged.
"""

from __future__ import annotations

import json
import queue
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import maze
from .hitl import InputRejected, TrainingMode
from .learn import Hyperparams
from .maze import Action, MazeConfig
from .session import (
    DEFAULT_STEP_INTERVAL_MS,
    Session,
    SessionManager,
    SnapshotError,
)

SSE_KEEPALIVE_S = 15.0


class CreateSessionRequest(BaseModel):
    config: Optional[dict] = None
    seed: int = 0
    alpha: float = 0.05
    gamma: float = 0.9
    epsilon: float = 0.3
    step_interval_ms: Optional[int] = None
    bridge_url: Optional[str] = None


class ControlRequest(BaseModel):
    command: str


class ModeRequest(BaseModel):
    mode: str


class EpsilonRequest(BaseModel):
    epsilon: float


class AdviceRequest(BaseModel):
    action: str


class RewardRequest(BaseModel):
    value: Optional[float] = None
    confirm: bool = False


class SaveRequest(BaseModel):
    path: str


class LoadRequest(BaseModel):
    path: str
    bridge_url: Optional[str] = None
    step_interval_ms: Optional[int] = None


def create_app(
    manager: Optional[SessionManager] = None,
    default_bridge_url: Optional[str] = None,
    default_step_interval_ms: int = DEFAULT_STEP_INTERVAL_MS,
) -> FastAPI:
    app = FastAPI(title="qcoach session server", version="0.1.0")
    app.state.manager = manager or SessionManager()
    app.state.default_bridge_url = default_bridge_url
    app.state.default_step_interval_ms = default_step_interval_ms

    def get_session(session_id: str) -> Session:
        try:
            return app.state.manager.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.post("/session")
    def create_session(req: CreateSessionRequest):
        try:
            config = MazeConfig.from_dict(req.config) if req.config is not None else MazeConfig()
            hp = Hyperparams(alpha=req.alpha, gamma=req.gamma, epsilon=req.epsilon)
        except (maze.InvalidConfigError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        interval = (
            req.step_interval_ms
            if req.step_interval_ms is not None
            else app.state.default_step_interval_ms
        )
        bridge_url = req.bridge_url if req.bridge_url is not None else app.state.default_bridge_url
        session = Session(
            config, hp, seed=req.seed, step_interval_ms=interval, bridge_url=bridge_url
        )
        app.state.manager.add(session)
        return {"session_id": session.id, "status": session.status()}

    @app.get("/session/{session_id}/status")
    def status(session_id: str):
        return get_session(session_id).status()

    @app.get("/session/{session_id}/config")
    def config(session_id: str):
        return get_session(session_id).config.to_dict()

    @app.post("/session/{session_id}/control")
    def control(session_id: str, req: ControlRequest):
        session = get_session(session_id)
        try:
            return session.control(req.command)
        except InputRejected as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/session/{session_id}/mode")
    def set_mode(session_id: str, req: ModeRequest):
        session = get_session(session_id)
        try:
            session.set_mode(TrainingMode(req.mode))
        except ValueError:
            raise HTTPException(status_code=422, detail=f"unknown mode {req.mode!r}")
        return session.status()

    @app.post("/session/{session_id}/epsilon")
    def set_epsilon(session_id: str, req: EpsilonRequest):
        session = get_session(session_id)
        try:
            session.set_epsilon(req.epsilon)
        except InputRejected as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return session.status()

    @app.post("/session/{session_id}/advice")
    def advice(session_id: str, req: AdviceRequest):
        session = get_session(session_id)
        try:
            action = Action.from_name(req.action)
        except maze.MazeError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            session.submit_advice(action)
        except InputRejected as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"accepted": True, "status": session.status()}

    @app.post("/session/{session_id}/reward")
    def reward(session_id: str, req: RewardRequest):
        session = get_session(session_id)
        try:
            if req.confirm:
                session.confirm_reward()
            elif req.value is not None:
                session.submit_reward_override(req.value)
            else:
                raise HTTPException(status_code=422, detail="provide value or confirm=true")
        except InputRejected as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"accepted": True, "status": session.status()}

    @app.get("/session/{session_id}/qtable")
    def qtable(session_id: str):
        return get_session(session_id).snapshot_qtable()

    @app.get("/session/{session_id}/visits")
    def visits(session_id: str):
        return get_session(session_id).snapshot_visits()

    @app.get("/session/{session_id}/trajectory")
    def trajectory(session_id: str):
        return get_session(session_id).snapshot_trajectory()

    @app.get("/session/{session_id}/events")
    def events(session_id: str):
        session = get_session(session_id)
        # subscribe before streaming starts so no event can slip past
        # between the client's connect and the first body chunk
        sub = session.bus.subscribe()

        def stream():
            try:
                while True:
                    try:
                        event = sub.queue.get(timeout=SSE_KEEPALIVE_S)
                    except queue.Empty:
                        if sub.dropped:
                            yield _sse({"kind": "stream_closed", "reason": "subscriber too slow"})
                            return
                        yield ": keepalive\n\n"
                        continue
                    yield _sse(event.to_dict())
                    if sub.dropped and sub.queue.empty():
                        yield _sse({"kind": "stream_closed", "reason": "subscriber too slow"})
                        return
            finally:
                session.bus.unsubscribe(sub)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/session/{session_id}/save")
    def save(session_id: str, req: SaveRequest):
        session = get_session(session_id)
        try:
            session.save(req.path)
        except OSError as exc:
            raise HTTPException(status_code=422, detail=f"cannot write snapshot: {exc}")
        return {"saved": req.path}

    @app.post("/session/load")
    def load(req: LoadRequest):
        try:
            session = Session.load(
                req.path,
                bridge_url=req.bridge_url or app.state.default_bridge_url,
                step_interval_ms=req.step_interval_ms,
            )
        except (SnapshotError, maze.InvalidConfigError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except OSError as exc:
            raise HTTPException(status_code=422, detail=f"cannot read snapshot: {exc}")
        app.state.manager.add(session)
        return {"session_id": session.id, "status": session.status()}

    return app


def _sse(payload: dict) -> str:
    return f"data: {json.dumps(payload, separators=(',', ':'))}\n\n"
