"""Training session: owns one loop, its tables, its event feed.

A session wires the environment, the learner, the five-phase loop and an
optional robot bridge together behind a single lock, runs the loop on a
worker thread when started, fans immutable telemetry events out to any
number of subscribers, and can freeze itself to a JSON snapshot at any
phase boundary. (seed, config, ordered inputs) fully determine every
step record and event payload, so a reloaded snapshot replays bit-equal.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

import requests

from . import learn, maze
from .hitl import (
    Awaiting,
    BridgeUnavailable,
    InputRejected,
    StepPhase,
    TrainingLoop,
    TrainingMode,
)
from .learn import (
    ActionSource,
    EpisodeLog,
    Hyperparams,
    QTable,
    RewardSource,
    StepRecord,
    TerminatedBy,
    VisitCounts,
)
from .maze import Action, EnvState, GridPos, MazeConfig, StepEvent
from .rng import CountedRng

SESSION_SCHEMA_VERSION = 1
EVENT_BUFFER_SIZE = 1024
DEFAULT_STEP_INTERVAL_MS = 300
DEFAULT_BRIDGE_TIMEOUT_S = 2.0


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class TrainingEvent:
    seq: int
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload}


class Subscription:
    def __init__(self, size: int = EVENT_BUFFER_SIZE):
        self.queue: "queue.Queue[TrainingEvent]" = queue.Queue(maxsize=size)
        self.dropped = False


class EventBus:
    """Fan-out of training events; slow readers are cut, never waited on."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs: list[Subscription] = []
        self._seq = 0

    def publish(self, kind: str, payload: dict) -> TrainingEvent:
        with self._lock:
            self._seq += 1
            event = TrainingEvent(self._seq, kind, payload)
            for sub in list(self._subs):
                try:
                    sub.queue.put_nowait(event)
                except queue.Full:
                    sub.dropped = True
                    self._subs.remove(sub)
        return event

    def subscribe(self) -> Subscription:
        sub = Subscription()
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)


class BridgeClient:
    """HTTP client for the robot bridge; failures mean "robot unreachable"."""

    def __init__(self, base_url: str, timeout_s: float = DEFAULT_BRIDGE_TIMEOUT_S):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def _command(self, line: str) -> dict:
        try:
            resp = requests.post(
                f"{self.base_url}/command",
                data=line.encode("ascii"),
                headers={"Content-Type": "text/plain"},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise BridgeUnavailable(f"bridge unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BridgeUnavailable(f"bridge refused command: HTTP {resp.status_code}")
        return resp.json()

    def move(self, action: Action) -> None:
        self._command(f"MOVE {action.letter}\n")

    def reset_pose(self, cell: GridPos) -> None:
        self._command(f"RESET {cell.row} {cell.col} 0\n")


class Session:
    def __init__(
        self,
        config: MazeConfig,
        hp: Hyperparams,
        seed: int = 0,
        step_interval_ms: int = DEFAULT_STEP_INTERVAL_MS,
        bridge_url: Optional[str] = None,
        bridge_timeout_s: float = DEFAULT_BRIDGE_TIMEOUT_S,
        session_id: Optional[str] = None,
    ):
        problems = maze.validate_config(config)
        if problems:
            raise maze.InvalidConfigError(problems)
        self.id = session_id or uuid.uuid4().hex[:12]
        self.config = config
        self.seed = seed
        self.step_interval_ms = step_interval_ms
        self.bridge_url = bridge_url
        self.bus = EventBus()
        self.lock = threading.RLock()
        rng = CountedRng(seed)
        q = QTable.for_config(config)
        counts = VisitCounts.for_config(config)
        bridge = BridgeClient(bridge_url, bridge_timeout_s) if bridge_url else None
        self.loop = TrainingLoop(config, q, counts, hp, rng, bridge=bridge, emit=self.bus.publish)

        self._running = threading.Event()
        self._wake = threading.Event()
        self._runner: Optional[threading.Thread] = None

    # ------------------------------------------------------------------
    # controls
    # ------------------------------------------------------------------

    @property
    def running(self) -> bool:
        return self._running.is_set() and self._runner is not None and self._runner.is_alive()

    def control(self, command: str) -> dict:
        if command == "start":
            self.start()
        elif command == "pause":
            self.pause()
        elif command == "step":
            self.step()
        elif command == "reset":
            self.reset_episode()
        else:
            raise InputRejected(f"unknown control {command!r}")
        return self.status()

    def start(self) -> None:
        with self.lock:
            if self.running:
                return
            self._running.set()
            self._runner = threading.Thread(target=self._run, daemon=True)
            self._runner.start()

    def pause(self) -> None:
        self._running.clear()
        self._wake.set()
        runner = self._runner
        if runner is not None and runner is not threading.current_thread():
            runner.join(timeout=10)

    def step(self) -> str:
        """One full five-phase cycle (or up to the park point)."""
        with self.lock:
            if self.running:
                raise InputRejected("pause first")
            return self.loop.run_cycle()

    def reset_episode(self) -> None:
        with self.lock:
            self.loop.abort_episode()

    def set_mode(self, mode: TrainingMode) -> None:
        with self.lock:
            self.loop.set_mode(mode)
        self._wake.set()

    def set_epsilon(self, epsilon: float) -> None:
        with self.lock:
            self.loop.set_epsilon(epsilon)

    def submit_advice(self, action: Action) -> None:
        with self.lock:
            self.loop.submit_advice(action)
        self._wake.set()

    def submit_reward_override(self, value: float) -> None:
        with self.lock:
            self.loop.submit_reward_override(value)
        self._wake.set()

    def confirm_reward(self) -> None:
        with self.lock:
            self.loop.confirm_reward()
        self._wake.set()

    def _run(self) -> None:
        interval_s = self.step_interval_ms / 1000.0
        while self._running.is_set():
            with self.lock:
                if not self._running.is_set():
                    break
                try:
                    advanced = self.loop.advance_phase()
                except BridgeUnavailable as exc:
                    self._running.clear()
                    self.bus.publish(
                        "awaiting_input", {"kind": "bridge_down", "detail": str(exc)}
                    )
                    return
            if advanced:
                if interval_s > 0:
                    # spread the pacing across the five phases of a step
                    time.sleep(interval_s / 5.0)
            else:
                self._wake.wait(timeout=0.05)
                self._wake.clear()

    # ------------------------------------------------------------------
    # snapshots for the UI
    # ------------------------------------------------------------------

    def status(self) -> dict:
        with self.lock:
            st = self.loop.status()
            state = self.loop.env
            legal = [] if state.done else [a.name.lower() for a in maze.legal_actions(state, self.config)]
            return {
                "session_id": self.id,
                "mode": st.mode.value,
                "phase": st.phase.value,
                "current_state": st.current_state,
                "current_cell": [state.pos.row, state.pos.col],
                "treasure_collected": state.treasure_collected,
                "last_action": st.last_action.name.lower() if st.last_action is not None else None,
                "last_reward": st.last_reward,
                "episode": st.episode,
                "score": st.score,
                "awaiting": st.awaiting.value if st.awaiting is not None else None,
                "epsilon": st.epsilon,
                "running": self.running,
                "legal_actions": legal,
            }

    def snapshot_qtable(self) -> dict:
        with self.lock:
            values = self.loop.q.to_lists()
            flat = [v for row in values for v in row]
            return {
                "width": self.config.width,
                "height": self.config.height,
                "num_states": self.loop.q.num_states,
                "num_actions": self.loop.q.num_actions,
                "values": values,
                "min": min(flat),
                "max": max(flat),
            }

    def snapshot_visits(self) -> dict:
        with self.lock:
            return {
                "width": self.config.width,
                "height": self.config.height,
                "counts": self.loop.counts.to_lists(),
                "total": self.loop.counts.total(),
            }

    def snapshot_trajectory(self) -> dict:
        with self.lock:
            last = next(
                (log for log in reversed(self.loop.episodes) if not log.aborted), None
            )
            if last is None:
                return {"has_episode": False, "episode": None, "steps": []}
            steps = []
            for rec in last.records:
                cell = maze.index_to_state(rec.s, self.config).pos
                next_cell = maze.index_to_state(rec.s_next, self.config).pos
                steps.append(
                    {
                        "cell": [cell.row, cell.col],
                        "next_cell": [next_cell.row, next_cell.col],
                        "action": rec.a.name.lower(),
                        "reward": rec.r,
                        "event": rec.event.value,
                    }
                )
            return {
                "has_episode": True,
                "episode": last.episode_index,
                "score": last.score,
                "found_treasure": last.found_treasure,
                "steps": steps,
            }

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def to_snapshot(self) -> dict:
        with self.lock:
            loop = self.loop
            return {
                "schema_version": SESSION_SCHEMA_VERSION,
                "kind": "session",
                "config": self.config.to_dict(),
                "hyperparams": {
                    "alpha": loop.hp.alpha,
                    "gamma": loop.hp.gamma,
                    "epsilon": loop.hp.epsilon,
                },
                "qtable": loop.q.to_lists(),
                "visit_counts": loop.counts.to_lists(),
                "rng": loop.rng.state(),
                "episodes": [_episode_to_dict(log) for log in loop.episodes],
                "loop": {
                    "mode": loop.mode.value,
                    "phase": loop.phase.value,
                    "episode_index": loop.episode_index,
                    "score": loop.score,
                    "env": _env_to_dict(loop.env),
                    "records": [_record_to_dict(r) for r in loop.records],
                    "last_action": loop.last_action.name.lower() if loop.last_action else None,
                    "last_reward": loop.last_reward,
                    "pending_advice": (
                        loop._pending_advice.name.lower() if loop._pending_advice else None
                    ),
                    "pending_reward": _pending_reward_to_json(loop._pending_reward),
                    "inflight": _inflight_to_dict(loop),
                    "bridge_synced": loop._bridge_synced,
                },
                "step_interval_ms": self.step_interval_ms,
            }

    def save(self, path: str) -> None:
        snapshot = self.to_snapshot()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dump_canonical(snapshot))

    @classmethod
    def from_snapshot(
        cls,
        snapshot: dict,
        bridge_url: Optional[str] = None,
        step_interval_ms: Optional[int] = None,
        session_id: Optional[str] = None,
    ) -> "Session":
        version = snapshot.get("schema_version")
        if version != SESSION_SCHEMA_VERSION:
            raise SnapshotError(
                f"snapshot schema_version {version!r} not supported "
                f"(this build reads version {SESSION_SCHEMA_VERSION})"
            )
        config = MazeConfig.from_dict(snapshot["config"])
        hp = Hyperparams(**snapshot["hyperparams"])
        session = cls(
            config,
            hp,
            seed=snapshot["rng"]["seed"],
            step_interval_ms=(
                step_interval_ms if step_interval_ms is not None else snapshot["step_interval_ms"]
            ),
            bridge_url=bridge_url,
            session_id=session_id,
        )
        loop = session.loop
        loop.q = QTable.from_lists(snapshot["qtable"])
        loop.counts = VisitCounts.from_lists(snapshot["visit_counts"])
        loop.rng = CountedRng.from_state(snapshot["rng"])
        loop.episodes = [_episode_from_dict(d) for d in snapshot["episodes"]]
        ls = snapshot["loop"]
        loop.mode = TrainingMode(ls["mode"])
        loop.phase = StepPhase(ls["phase"])
        loop.episode_index = ls["episode_index"]
        loop.score = ls["score"]
        loop.env = _env_from_dict(ls["env"])
        loop.records = [_record_from_dict(d) for d in ls["records"]]
        loop.last_action = Action.from_name(ls["last_action"]) if ls["last_action"] else None
        loop.last_reward = ls["last_reward"]
        loop._pending_advice = (
            Action.from_name(ls["pending_advice"]) if ls["pending_advice"] else None
        )
        loop._pending_reward = _pending_reward_from_json(ls["pending_reward"])
        _inflight_from_dict(loop, ls["inflight"])
        loop._bridge_synced = ls["bridge_synced"] and bridge_url is not None
        return session

    @classmethod
    def load(cls, path: str, **kwargs) -> "Session":
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        try:
            snapshot = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"corrupt snapshot at byte {exc.pos}: {exc.msg}") from exc
        return cls.from_snapshot(snapshot, **kwargs)


def dump_canonical(obj: dict) -> str:
    """Stable byte-for-byte serialization for snapshot round-trips."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _env_to_dict(env: EnvState) -> dict:
    return {
        "pos": [env.pos.row, env.pos.col],
        "treasure_collected": env.treasure_collected,
        "steps_taken": env.steps_taken,
        "done": env.done,
    }


def _env_from_dict(data: dict) -> EnvState:
    return EnvState(
        GridPos(*data["pos"]), data["treasure_collected"], data["steps_taken"], data["done"]
    )


def _record_to_dict(rec: StepRecord) -> dict:
    return {
        "s": rec.s,
        "a": rec.a.name.lower(),
        "r": rec.r,
        "s_next": rec.s_next,
        "done": rec.done,
        "reward_source": rec.reward_source.value,
        "action_source": rec.action_source.value,
        "event": rec.event.value,
    }


def _record_from_dict(data: dict) -> StepRecord:
    return StepRecord(
        s=data["s"],
        a=Action.from_name(data["a"]),
        r=data["r"],
        s_next=data["s_next"],
        done=data["done"],
        reward_source=RewardSource(data["reward_source"]),
        action_source=ActionSource(data["action_source"]),
        event=StepEvent(data["event"]),
    )


def _episode_to_dict(log: EpisodeLog) -> dict:
    return {
        "episode_index": log.episode_index,
        "records": [_record_to_dict(r) for r in log.records],
        "score": log.score,
        "found_treasure": log.found_treasure,
        "terminated_by": log.terminated_by.value,
        "aborted": log.aborted,
    }


def _episode_from_dict(data: dict) -> EpisodeLog:
    return EpisodeLog(
        episode_index=data["episode_index"],
        records=[_record_from_dict(r) for r in data["records"]],
        score=data["score"],
        found_treasure=data["found_treasure"],
        terminated_by=TerminatedBy(data["terminated_by"]),
        aborted=data["aborted"],
    )


def _pending_reward_to_json(pending) -> object:
    from .hitl import _CONFIRM

    if pending is None:
        return None
    if pending is _CONFIRM:
        return "confirm"
    return float(pending)


def _pending_reward_from_json(value):
    from .hitl import _CONFIRM

    if value is None:
        return None
    if value == "confirm":
        return _CONFIRM
    return float(value)


def _inflight_to_dict(loop: TrainingLoop) -> Optional[dict]:
    if loop._chosen is None and loop._outcome is None and loop._s is None:
        return None
    out: dict = {"s": loop._s}
    if loop._chosen is not None:
        action, source = loop._chosen
        out["chosen"] = [action.name.lower(), source.value]
    else:
        out["chosen"] = None
    if loop._outcome is not None:
        out["outcome"] = {
            "next": _env_to_dict(loop._outcome.next),
            "reward": loop._outcome.reward,
            "event": loop._outcome.event.value,
        }
    else:
        out["outcome"] = None
    if loop._reward is not None:
        value, source = loop._reward
        out["reward"] = [value, source.value]
    else:
        out["reward"] = None
    return out


def _inflight_from_dict(loop: TrainingLoop, data: Optional[dict]) -> None:
    if data is None:
        return
    loop._s = data["s"]
    if data["chosen"] is not None:
        loop._chosen = (Action.from_name(data["chosen"][0]), ActionSource(data["chosen"][1]))
    if data["outcome"] is not None:
        loop._outcome = maze.StepOutcome(
            next=_env_from_dict(data["outcome"]["next"]),
            reward=data["outcome"]["reward"],
            event=StepEvent(data["outcome"]["event"]),
        )
    if data["reward"] is not None:
        loop._reward = (data["reward"][0], RewardSource(data["reward"][1]))


class SessionManager:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> Session:
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            return self._sessions[session_id]

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def stop_all(self) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            session.pause()
