"""Human-in-the-loop training loop.

One environment step is stretched over five phases so a human teacher
can watch and intervene:

    ObserveState -> ChooseAction -> ExecuteAction -> ReceiveReward -> UpdateQ

In automatic mode all five run back to back. In manual mode the loop
parks in ChooseAction until the teacher supplies a direction, and in
ReceiveReward until the teacher either overrides the reward or confirms
the automatic one. Inputs land in single-slot mailboxes (latest wins,
rejected outside their phase) and are consumed only at phase boundaries,
so mode flips never tear a step in half.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

from . import learn, maze
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
from .maze import Action, EnvState, MazeConfig, StepEvent
from .rng import CountedRng

REWARD_OVERRIDE_MIN = -30.0
REWARD_OVERRIDE_MAX = 30.0


class TrainingMode(Enum):
    AUTO = "auto"
    MANUAL = "manual"


class StepPhase(Enum):
    OBSERVE_STATE = "observe_state"
    CHOOSE_ACTION = "choose_action"
    EXECUTE_ACTION = "execute_action"
    RECEIVE_REWARD = "receive_reward"
    UPDATE_Q = "update_q"


PHASE_ORDER: tuple[StepPhase, ...] = (
    StepPhase.OBSERVE_STATE,
    StepPhase.CHOOSE_ACTION,
    StepPhase.EXECUTE_ACTION,
    StepPhase.RECEIVE_REWARD,
    StepPhase.UPDATE_Q,
)


class Awaiting(Enum):
    ADVICE = "advice"
    REWARD = "reward"


class InputRejected(Exception):
    """A human input that the loop cannot accept right now; not a defect."""


class BridgeUnavailable(Exception):
    """The robot bridge did not answer; the step must not be committed."""


@dataclass(frozen=True)
class LoopStatus:
    mode: TrainingMode
    phase: StepPhase
    current_state: int
    last_action: Optional[Action]
    last_reward: Optional[float]
    episode: int
    score: float
    awaiting: Optional[Awaiting]
    epsilon: float


# Reward mailbox sentinel: teacher accepted the automatic reward.
_CONFIRM = object()


class TrainingLoop:
    """The per-session step state machine.

    Not thread safe by itself; the owning session serializes access.
    ``bridge`` (optional) gets a ``move(action)`` per ExecuteAction and a
    ``reset_pose(cell)`` at each episode start; it may raise
    BridgeUnavailable, which leaves the phase unentered so a later
    advance retries cleanly. ``emit`` (optional) receives
    ``(kind, payload)`` telemetry.
    """

    def __init__(
        self,
        config: MazeConfig,
        q: QTable,
        counts: VisitCounts,
        hp: Hyperparams,
        rng: CountedRng,
        bridge=None,
        emit: Optional[Callable[[str, dict], None]] = None,
    ):
        self.config = config
        self.q = q
        self.counts = counts
        self.hp = hp
        self.rng = rng
        self.bridge = bridge
        self._emit = emit or (lambda kind, payload: None)

        self.mode = TrainingMode.AUTO
        self.phase = StepPhase.OBSERVE_STATE
        self.env = maze.reset(config)
        self.episode_index = 0
        self.episodes: list[EpisodeLog] = []
        self.records: list[StepRecord] = []
        self.score = 0.0
        self.last_action: Optional[Action] = None
        self.last_reward: Optional[float] = None

        self._pending_advice: Optional[Action] = None
        self._pending_reward: Optional[object] = None  # float or _CONFIRM
        self._parked = False
        self._bridge_synced = False

        # in-flight step scratch, populated phase by phase
        self._s: Optional[int] = None
        self._chosen: Optional[tuple[Action, ActionSource]] = None
        self._outcome: Optional[maze.StepOutcome] = None
        self._reward: Optional[tuple[float, RewardSource]] = None

    # ------------------------------------------------------------------
    # status and inputs
    # ------------------------------------------------------------------

    def status(self) -> LoopStatus:
        return LoopStatus(
            mode=self.mode,
            phase=self.phase,
            current_state=maze.state_index(self.env, self.config),
            last_action=self.last_action,
            last_reward=self.last_reward,
            episode=self.episode_index,
            score=self.score,
            awaiting=self._awaiting(),
            epsilon=self.hp.epsilon,
        )

    def _awaiting(self) -> Optional[Awaiting]:
        if self.mode is not TrainingMode.MANUAL:
            return None
        if self.phase is StepPhase.CHOOSE_ACTION:
            return Awaiting.ADVICE
        if self.phase is StepPhase.RECEIVE_REWARD:
            return Awaiting.REWARD
        return None

    def set_mode(self, mode: TrainingMode) -> None:
        if mode is self.mode:
            return
        self.mode = mode
        if mode is TrainingMode.AUTO:
            # manual-only inputs are moot once the loop runs by itself
            self._pending_advice = None
            self._pending_reward = None
        self._parked = False
        self._emit("mode_changed", {"mode": mode.value})

    def set_epsilon(self, epsilon: float) -> None:
        if not 0.0 <= epsilon <= 1.0:
            raise InputRejected(f"epsilon must be in [0, 1], got {epsilon}")
        self.hp = replace(self.hp, epsilon=float(epsilon))
        self._emit("epsilon_changed", {"epsilon": float(epsilon)})

    def submit_advice(self, action: Action) -> None:
        if self.mode is not TrainingMode.MANUAL or self.phase is not StepPhase.CHOOSE_ACTION:
            raise InputRejected("not awaiting advice")
        if action not in maze.legal_actions(self.env, self.config):
            raise InputRejected("action is masked here")
        self._pending_advice = action

    def submit_reward_override(self, value: float) -> None:
        if self.mode is not TrainingMode.MANUAL or self.phase is not StepPhase.RECEIVE_REWARD:
            raise InputRejected("not awaiting reward")
        if not REWARD_OVERRIDE_MIN <= value <= REWARD_OVERRIDE_MAX:
            raise InputRejected(
                f"reward must be in [{REWARD_OVERRIDE_MIN:g}, {REWARD_OVERRIDE_MAX:g}]"
            )
        self._pending_reward = float(value)

    def confirm_reward(self) -> None:
        """Accept the automatic reward for the in-flight step as-is."""
        if self.mode is not TrainingMode.MANUAL or self.phase is not StepPhase.RECEIVE_REWARD:
            raise InputRejected("not awaiting reward")
        self._pending_reward = _CONFIRM

    # ------------------------------------------------------------------
    # the phase machine
    # ------------------------------------------------------------------

    def advance_phase(self) -> bool:
        """Run the work of the current phase and move to the next one.

        Returns False (and changes nothing) when the loop is parked in a
        manual phase that still lacks its input. Raises
        BridgeUnavailable, with the phase not consumed, if the robot
        cannot be reached during ExecuteAction.
        """
        phase = self.phase
        if phase is StepPhase.OBSERVE_STATE:
            self._observe()
        elif phase is StepPhase.CHOOSE_ACTION:
            if not self._choose():
                return False
        elif phase is StepPhase.EXECUTE_ACTION:
            self._execute()
        elif phase is StepPhase.RECEIVE_REWARD:
            if not self._receive():
                return False
        else:
            self._update()
        self._parked = False
        self.phase = PHASE_ORDER[(PHASE_ORDER.index(phase) + 1) % len(PHASE_ORDER)]
        self._emit("phase_changed", {"phase": self.phase.value})
        return True

    def run_cycle(self) -> str:
        """Advance until the next episode-step boundary (ObserveState).

        Returns "completed", or "parked" if a manual phase is waiting on
        input.
        """
        while True:
            if not self.advance_phase():
                return "parked"
            if self.phase is StepPhase.OBSERVE_STATE:
                return "completed"

    def _observe(self) -> None:
        if self.bridge is not None and not self._bridge_synced:
            self.bridge.reset_pose(self.env.pos)
            self._bridge_synced = True
        self._s = maze.state_index(self.env, self.config)

    def _choose(self) -> bool:
        if self.mode is TrainingMode.MANUAL:
            if self._pending_advice is None:
                self._park(Awaiting.ADVICE)
                return False
            action, source = self._pending_advice, ActionSource.ADVISED
            self._pending_advice = None
        else:
            legal = maze.legal_actions(self.env, self.config)
            action, source = learn.select_action(
                self.q, self._s, legal, self.hp.epsilon, self.rng
            )
        self._chosen = (action, source)
        self.last_action = action
        return True

    def _execute(self) -> None:
        action, _ = self._chosen
        if self.bridge is not None:
            self.bridge.move(action)  # may raise BridgeUnavailable; nothing committed yet
        self._outcome = maze.step(self.env, action, self.config)
        self.env = self._outcome.next

    def _receive(self) -> bool:
        auto = self._outcome.reward
        if self.mode is TrainingMode.MANUAL:
            if self._pending_reward is None:
                self._park(Awaiting.REWARD)
                return False
            if self._pending_reward is _CONFIRM:
                self._reward = (auto, RewardSource.AUTOMATIC)
            else:
                self._reward = (self._pending_reward, RewardSource.HUMAN_OVERRIDE)
            self._pending_reward = None
        else:
            self._reward = (auto, RewardSource.AUTOMATIC)
        value = self._reward[0]
        self.last_reward = value
        self.score += value
        return True

    def _update(self) -> None:
        action, action_source = self._chosen
        reward, reward_source = self._reward
        outcome = self._outcome
        s_next = maze.state_index(outcome.next, self.config)
        rec = StepRecord(
            self._s, action, reward, s_next, outcome.next.done,
            reward_source, action_source, outcome.event,
        )
        self.counts.increment(rec.s, rec.a)
        old = float(self.q.values[rec.s, rec.a])
        new = learn.q_update(self.q, rec, self.hp)
        self._emit(
            "q_cell_updated",
            {"state": rec.s, "action": rec.a.name.lower(), "old_value": old, "new_value": new},
        )
        self.records.append(rec)
        self._emit(
            "step_completed",
            {
                "episode": self.episode_index,
                "state": rec.s,
                "action": rec.a.name.lower(),
                "reward": reward,
                "next_state": rec.s_next,
                "done": rec.done,
                "event": rec.event.value,
                "reward_source": reward_source.value,
                "action_source": action_source.value,
                "score": self.score,
            },
        )
        self._chosen = self._outcome = self._reward = None
        if rec.done:
            self._close_episode(aborted=False)

    def _park(self, kind: Awaiting) -> None:
        if not self._parked:
            self._parked = True
            self._emit("awaiting_input", {"kind": kind.value})

    # ------------------------------------------------------------------
    # episode bookkeeping
    # ------------------------------------------------------------------

    def _close_episode(self, aborted: bool) -> None:
        log = EpisodeLog(
            episode_index=self.episode_index,
            records=self.records,
            # summed from records, not from the live counter: an abort can
            # land between ReceiveReward and UpdateQ, where the counter
            # already includes a reward whose record was never committed
            score=sum(r.r for r in self.records),
            found_treasure=self.env.treasure_collected,
            terminated_by=(
                TerminatedBy.EXIT
                if not aborted and self.records and self.records[-1].event is StepEvent.EXIT_REACHED
                else TerminatedBy.TIMEOUT
            ),
            aborted=aborted,
        )
        self.episodes.append(log)
        self._emit(
            "episode_completed",
            {
                "episode": log.episode_index,
                "score": log.score,
                "steps": len(log.records),
                "found_treasure": log.found_treasure,
                "terminated_by": log.terminated_by.value,
                "aborted": aborted,
            },
        )
        self.episode_index += 1
        self.records = []
        self.score = 0.0
        self.env = maze.reset(self.config)
        self._bridge_synced = False

    def abort_episode(self) -> None:
        """Start a new episode now, without touching the Q table.

        A part-way episode is closed as aborted (kept out of the
        learning-curve stats); an untouched episode is simply restarted.
        """
        if self.records:
            self._close_episode(aborted=True)
        else:
            self.env = maze.reset(self.config)
            self._bridge_synced = False
        self._pending_advice = None
        self._pending_reward = None
        self._chosen = self._outcome = self._reward = None
        self._parked = False
        self.phase = StepPhase.OBSERVE_STATE
        self._emit("phase_changed", {"phase": self.phase.value})
