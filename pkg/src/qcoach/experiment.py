"""Advised-vs-autonomous sample-complexity experiment.

Trains the same learner twice per seed — once alone, once with a
scripted teacher that feeds it the oracle's action during the first k
episodes — and compares how many episodes each arm needs before its
trajectory first matches the oracle-optimal one. The teacher draws from
its own derived stream so the two arms consume identical learner
randomness up to the teacher's interventions.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from typing import Optional

from . import learn, maze
from .learn import EpisodeLog, Hyperparams, QTable, Teacher, TerminatedBy, VisitCounts
from .maze import Action, MazeConfig
from .rng import CountedRng

ARM_NONE = "none"
ARM_ORACLE_ADVICE = "oracle_advice"

# keeps the teacher's stream disjoint from the learner's for any seed
TEACHER_SEED_OFFSET = 1_000_003

REPORT_COLUMNS = [
    "arm",
    "seed",
    "episodes_to_first_optimal",
    "censored",
    "advised_steps",
]


@dataclass(frozen=True)
class OracleAdviceSpec:
    first_k_episodes: int
    advice_probability: float

    def __post_init__(self):
        if self.first_k_episodes < 0:
            raise ValueError("first_k_episodes must be >= 0")
        if not 0.0 <= self.advice_probability <= 1.0:
            raise ValueError("advice_probability must be in [0, 1]")


@dataclass(frozen=True)
class ExperimentSpec:
    config: MazeConfig
    seeds: list[int]
    episodes: int
    teacher: Optional[OracleAdviceSpec]
    hp: Hyperparams = Hyperparams()

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


@dataclass
class ArmSeedResult:
    arm: str
    seed: int
    episodes_to_first_optimal: int  # 1-based; equals the cap when censored
    censored: bool
    advised_steps: int
    curve: list[EpisodeLog] = field(default_factory=list)


@dataclass
class ExperimentReport:
    rows: list[ArmSeedResult]
    median_by_arm: dict[str, float]
    censored_by_arm: dict[str, int]
    episodes: int

    def summary_lines(self) -> list[str]:
        lines = [f"arms: {ARM_NONE} vs {ARM_ORACLE_ADVICE}, cap {self.episodes} episodes"]
        for arm in (ARM_NONE, ARM_ORACLE_ADVICE):
            lines.append(
                f"  {arm}: median episodes-to-first-optimal "
                f"{self.median_by_arm[arm]:g} ({self.censored_by_arm[arm]} censored)"
            )
        return lines


class OracleAdviceTeacher(Teacher):
    """Scripted stand-in for the human: advises the oracle argmax."""

    def __init__(
        self,
        oracle_q: QTable,
        spec: OracleAdviceSpec,
        rng: CountedRng,
    ):
        self.oracle_q = oracle_q
        self.spec = spec
        self.rng = rng
        self._active = False

    def begin_episode(self, episode_index: int) -> None:
        self._active = episode_index < self.spec.first_k_episodes

    def advise(self, s: int, legal: tuple[Action, ...], q: QTable) -> Optional[Action]:
        if not self._active:
            return None
        if self.spec.advice_probability < 1.0 and not self.rng.chance(self.spec.advice_probability):
            return None
        row = self.oracle_q.values[s]
        return max(legal, key=lambda a: (float(row[a]), -int(a)))


def optimal_pairs(oracle_q: QTable, config: MazeConfig) -> list[tuple[int, Action]]:
    """(state index, action) sequence of the oracle's greedy trajectory."""
    return [
        (maze.state_index(state, config), action)
        for state, action, _ in learn.greedy_trace(oracle_q, config)
    ]


def episode_matches(log: EpisodeLog, pairs: list[tuple[int, Action]]) -> bool:
    if log.terminated_by is not TerminatedBy.EXIT or log.aborted:
        return False
    return [(r.s, r.a) for r in log.records] == pairs


def run_arm(
    config: MazeConfig,
    hp: Hyperparams,
    seed: int,
    episodes: int,
    teacher_spec: Optional[OracleAdviceSpec],
    oracle_q: QTable,
    pairs: list[tuple[int, Action]],
) -> ArmSeedResult:
    rng = CountedRng(seed)
    q = QTable.for_config(config)
    counts = VisitCounts.for_config(config)
    teacher = None
    if teacher_spec is not None:
        teacher = OracleAdviceTeacher(oracle_q, teacher_spec, CountedRng(seed + TEACHER_SEED_OFFSET))

    first_optimal: Optional[int] = None
    curve: list[EpisodeLog] = []
    for i in range(episodes):
        log = learn.run_episode(config, q, counts, hp, rng, teacher=teacher, episode_index=i)
        curve.append(log)
        if first_optimal is None and episode_matches(log, pairs):
            first_optimal = i + 1
    return ArmSeedResult(
        arm=ARM_ORACLE_ADVICE if teacher_spec is not None else ARM_NONE,
        seed=seed,
        episodes_to_first_optimal=first_optimal if first_optimal is not None else episodes,
        censored=first_optimal is None,
        advised_steps=sum(log.advised_steps for log in curve),
        curve=curve,
    )


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    oracle_q = learn.value_iteration(spec.config, spec.hp.gamma, tol=1e-8)
    pairs = optimal_pairs(oracle_q, spec.config)
    rows: list[ArmSeedResult] = []
    for teacher_spec in (None, spec.teacher):
        for seed in spec.seeds:
            rows.append(
                run_arm(spec.config, spec.hp, seed, spec.episodes, teacher_spec, oracle_q, pairs)
            )
    median_by_arm = {}
    censored_by_arm = {}
    for arm in (ARM_NONE, ARM_ORACLE_ADVICE):
        values = [r.episodes_to_first_optimal for r in rows if r.arm == arm]
        median_by_arm[arm] = float(statistics.median(values)) if values else float("nan")
        censored_by_arm[arm] = sum(1 for r in rows if r.arm == arm and r.censored)
    return ExperimentReport(rows, median_by_arm, censored_by_arm, spec.episodes)


def write_report_csv(path: str, report: ExperimentReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [row.arm, row.seed, row.episodes_to_first_optimal, int(row.censored), row.advised_steps]
            )


def write_curves_csv(path: str, report: ExperimentReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arm", "seed"] + learn.CURVE_COLUMNS)
        for row in report.rows:
            for log in row.curve:
                writer.writerow(
                    [
                        row.arm,
                        row.seed,
                        log.episode_index,
                        repr(log.score),
                        len(log.records),
                        int(log.found_treasure),
                        log.terminated_by.value,
                        log.advised_steps,
                        log.overridden_rewards,
                    ]
                )
