"""Tabular Q-learning on the treasure-hunt maze.

The learner is the classic one-step update

    Q(s,a) <- Q(s,a) + alpha * (R + gamma * max_a' Q(s',a') - Q(s,a))

with a zero bootstrap on terminal transitions and an epsilon-greedy
selection rule restricted to the unmasked actions. A value-iteration
solver over the same environment doubles as an independent oracle for
tests; it deliberately shares no code with q_update.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import maze
from .maze import Action, EnvState, MazeConfig, StepEvent
from .rng import CountedRng

QTABLE_SCHEMA_VERSION = 1

NUM_ACTIONS = len(Action)

CURVE_COLUMNS = [
    "episode",
    "score",
    "steps",
    "found_treasure",
    "terminated_by",
    "advised_steps",
    "overridden_rewards",
]


class RewardSource(Enum):
    AUTOMATIC = "automatic"
    HUMAN_OVERRIDE = "human_override"


class ActionSource(Enum):
    GREEDY = "greedy"
    EXPLORATORY = "exploratory"
    ADVISED = "advised"


class TerminatedBy(Enum):
    EXIT = "exit"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.05
    gamma: float = 0.9
    epsilon: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


@dataclass(frozen=True, slots=True)
class StepRecord:
    s: int
    a: Action
    r: float
    s_next: int
    done: bool
    reward_source: RewardSource
    action_source: ActionSource
    event: StepEvent


@dataclass
class EpisodeLog:
    episode_index: int
    records: list[StepRecord] = field(default_factory=list)
    score: float = 0.0
    found_treasure: bool = False
    terminated_by: TerminatedBy = TerminatedBy.TIMEOUT
    aborted: bool = False

    @property
    def advised_steps(self) -> int:
        return sum(1 for r in self.records if r.action_source is ActionSource.ADVISED)

    @property
    def overridden_rewards(self) -> int:
        return sum(1 for r in self.records if r.reward_source is RewardSource.HUMAN_OVERRIDE)


class QTable:
    """Dense |S| x |A| action-value table, zero-initialized.

    Entries for boundary-masked actions are never selected nor updated,
    so they stay at their zero init.
    """

    def __init__(self, num_states: int, num_actions: int = NUM_ACTIONS):
        self.num_states = num_states
        self.num_actions = num_actions
        self.values = np.zeros((num_states, num_actions), dtype=np.float64)

    @classmethod
    def for_config(cls, config: MazeConfig) -> "QTable":
        return cls(config.num_states)

    def copy(self) -> "QTable":
        out = QTable(self.num_states, self.num_actions)
        out.values = self.values.copy()
        return out

    def to_lists(self) -> list[list[float]]:
        return [[float(v) for v in row] for row in self.values]

    @classmethod
    def from_lists(cls, rows: list[list[float]]) -> "QTable":
        out = cls(len(rows), len(rows[0]) if rows else NUM_ACTIONS)
        out.values = np.array(rows, dtype=np.float64)
        return out


class VisitCounts:
    """How many times each (state, action) has been executed."""

    def __init__(self, num_states: int, num_actions: int = NUM_ACTIONS):
        self.num_states = num_states
        self.num_actions = num_actions
        self.counts = np.zeros((num_states, num_actions), dtype=np.int64)

    @classmethod
    def for_config(cls, config: MazeConfig) -> "VisitCounts":
        return cls(config.num_states)

    def increment(self, s: int, a: Action) -> None:
        self.counts[s, a] += 1

    def total(self) -> int:
        return int(self.counts.sum())

    def to_lists(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.counts]

    @classmethod
    def from_lists(cls, rows: list[list[int]]) -> "VisitCounts":
        out = cls(len(rows), len(rows[0]) if rows else NUM_ACTIONS)
        out.counts = np.array(rows, dtype=np.int64)
        return out


def q_update(q: QTable, rec: StepRecord, hp: Hyperparams) -> float:
    """Apply the one-step update for rec; returns the new entry value.

    Terminal transitions bootstrap from 0 instead of max_a' Q(s',a').
    """
    old = float(q.values[rec.s, rec.a])
    if not math.isfinite(rec.r) or not math.isfinite(old):
        raise ValueError("non-finite reward or Q entry")
    bootstrap = 0.0 if rec.done else float(q.values[rec.s_next].max())
    new = old + hp.alpha * (rec.r + hp.gamma * bootstrap - old)
    if not math.isfinite(new):
        raise ValueError("update produced a non-finite Q value")
    q.values[rec.s, rec.a] = new
    return new


def select_action(
    q: QTable,
    s: int,
    legal: tuple[Action, ...],
    epsilon: float,
    rng: CountedRng,
) -> tuple[Action, ActionSource]:
    """Epsilon-greedy over the legal actions only.

    Exploration is uniform over legal; exploitation breaks exact-value
    ties uniformly at random, so an all-zero table random-walks.
    """
    if not legal:
        raise ValueError("empty legal action set")
    if rng.chance(epsilon):
        return rng.pick(legal), ActionSource.EXPLORATORY
    row = q.values[s]
    best = max(float(row[a]) for a in legal)
    ties = [a for a in legal if float(row[a]) == best]
    if len(ties) == 1:
        return ties[0], ActionSource.GREEDY
    return rng.pick(ties), ActionSource.GREEDY


class Teacher:
    """Optional per-step intervention hook for run_episode.

    Subclasses may supply an action instead of the epsilon-greedy pick
    and/or replace the automatic reward; either intervention is recorded
    in the step's provenance.
    """

    def begin_episode(self, episode_index: int) -> None:
        pass

    def advise(self, s: int, legal: tuple[Action, ...], q: QTable) -> Optional[Action]:
        return None

    def override_reward(
        self, s: int, a: Action, auto_reward: float, s_next: int, done: bool
    ) -> Optional[float]:
        return None


def run_episode(
    config: MazeConfig,
    q: QTable,
    counts: VisitCounts,
    hp: Hyperparams,
    rng: CountedRng,
    teacher: Optional[Teacher] = None,
    episode_index: int = 0,
) -> EpisodeLog:
    """Reset, then loop select -> step -> update until the episode ends."""
    state = maze.reset(config)
    log = EpisodeLog(episode_index=episode_index)
    if teacher is not None:
        teacher.begin_episode(episode_index)

    while not state.done:
        s = maze.state_index(state, config)
        legal = maze.legal_actions(state, config)
        action = None
        if teacher is not None:
            action = teacher.advise(s, legal, q)
            if action is not None and action not in legal:
                raise maze.MaskedActionError("teacher advised a masked action")
        if action is not None:
            source = ActionSource.ADVISED
        else:
            action, source = select_action(q, s, legal, hp.epsilon, rng)

        counts.increment(s, action)
        outcome = maze.step(state, action, config)
        s_next = maze.state_index(outcome.next, config)

        reward, reward_source = outcome.reward, RewardSource.AUTOMATIC
        if teacher is not None:
            override = teacher.override_reward(s, action, outcome.reward, s_next, outcome.next.done)
            if override is not None:
                reward, reward_source = float(override), RewardSource.HUMAN_OVERRIDE

        rec = StepRecord(s, action, reward, s_next, outcome.next.done,
                         reward_source, source, outcome.event)
        q_update(q, rec, hp)
        log.records.append(rec)
        log.score += reward
        state = outcome.next

    log.found_treasure = state.treasure_collected
    log.terminated_by = (
        TerminatedBy.EXIT if log.records[-1].event is StepEvent.EXIT_REACHED else TerminatedBy.TIMEOUT
    )
    return log


def greedy_policy(q: QTable, config: MazeConfig) -> dict[int, Action]:
    """Per-state argmax over legal actions, ties broken by encoding order.

    Deterministic on purpose: this is the reproducible policy-dump view,
    unlike runtime selection which randomizes ties. Terminal (exit)
    states are left out.
    """
    policy: dict[int, Action] = {}
    for s in range(config.num_states):
        state = maze.index_to_state(s, config)
        if state.done:
            continue
        legal = maze.legal_actions(state, config)
        row = q.values[s]
        policy[s] = max(legal, key=lambda a: (float(row[a]), -int(a)))
    return policy


def greedy_trace(
    q: QTable, config: MazeConfig, cap: int = 1000
) -> list[tuple[EnvState, Action, maze.StepOutcome]]:
    """Roll the deterministic greedy policy from the start state."""
    policy = greedy_policy(q, config)
    state = maze.reset(config)
    trace = []
    for _ in range(cap):
        if state.done:
            break
        action = policy[maze.state_index(state, config)]
        outcome = maze.step(state, action, config)
        trace.append((state, action, outcome))
        state = outcome.next
    return trace


def value_iteration(
    config: MazeConfig, gamma: float, tol: float = 1e-8, max_sweeps: int = 100_000
) -> QTable:
    """Fixed-point solve of the optimality equation; the test oracle.

    Sweeps Q(s,a) = R(s,a) + gamma * max_a' Q(s',a') over every legal
    (state, action) pair, with zero continuation at the exit, until the
    largest entry change falls below tol. Independent of q_update.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    q = QTable.for_config(config)
    transitions = _enumerate_transitions(config)
    legal_by_state = _legal_actions_by_state(config)
    for _ in range(max_sweeps):
        residual = _sweep(q, transitions, legal_by_state, gamma)
        if residual < tol:
            return q
    raise RuntimeError(f"value iteration did not converge within {max_sweeps} sweeps")


def _legal_actions_by_state(config: MazeConfig) -> list[tuple[Action, ...]]:
    out: list[tuple[Action, ...]] = []
    for s in range(config.num_states):
        state = maze.index_to_state(s, config)
        out.append(() if state.done else maze.legal_actions(state, config))
    return out


def _enumerate_transitions(config: MazeConfig) -> list[tuple[int, Action, float, int, bool]]:
    out = []
    for s in range(config.num_states):
        state = maze.index_to_state(s, config)
        if state.done:
            continue
        for action in maze.legal_actions(state, config):
            outcome = maze.step(state, action, config)
            s_next = maze.state_index(outcome.next, config)
            terminal = outcome.next.pos == config.exit
            out.append((s, action, outcome.reward, s_next, terminal))
    return out


def _sweep(q: QTable, transitions, legal_by_state, gamma: float) -> float:
    """One synchronous Bellman backup; returns max absolute change."""
    old = q.values.copy()
    legal_max = [
        max((float(old[s, a]) for a in legal), default=0.0)
        for s, legal in enumerate(legal_by_state)
    ]
    new = old.copy()
    for s, action, reward, s_next, terminal in transitions:
        cont = 0.0 if terminal else legal_max[s_next]
        new[s, action] = reward + gamma * cont
    q.values = new
    return float(np.abs(new - old).max())


def bellman_residual(q: QTable, config: MazeConfig, gamma: float) -> float:
    """Max |Q(s,a) - (R + gamma max_a' Q(s',a'))| over legal pairs."""
    legal_by_state = _legal_actions_by_state(config)
    worst = 0.0
    for s, action, reward, s_next, terminal in _enumerate_transitions(config):
        cont = 0.0
        if not terminal:
            cont = max(float(q.values[s_next, a]) for a in legal_by_state[s_next])
        worst = max(worst, abs(float(q.values[s, action]) - (reward + gamma * cont)))
    return worst


def export_qtable(
    q: QTable,
    counts: VisitCounts,
    hp: Hyperparams,
    config: MazeConfig,
    seed: Optional[int] = None,
) -> dict:
    return {
        "schema_version": QTABLE_SCHEMA_VERSION,
        "kind": "qtable",
        "config_digest": config.digest(),
        "config": config.to_dict(),
        "num_states": q.num_states,
        "num_actions": q.num_actions,
        "values": q.to_lists(),
        "visit_counts": counts.to_lists(),
        "hyperparams": {"alpha": hp.alpha, "gamma": hp.gamma, "epsilon": hp.epsilon},
        "seed": seed,
    }


def save_qtable(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_qtable(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    version = data.get("schema_version")
    if version != QTABLE_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported qtable schema_version {version!r} (expected {QTABLE_SCHEMA_VERSION})"
        )
    return data


def write_learning_curve(path: str, episodes: list[EpisodeLog]) -> None:
    """One CSV row per completed episode; aborted episodes are skipped."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for log in episodes:
            if log.aborted:
                continue
            writer.writerow(
                [
                    log.episode_index,
                    repr(log.score),
                    len(log.records),
                    int(log.found_treasure),
                    log.terminated_by.value,
                    log.advised_steps,
                    log.overridden_rewards,
                ]
            )
