"""Treasure-hunt grid world.

A small deterministic MDP: the robot starts somewhere on a rectangular
grid, should pick up a treasure and leave through the exit. Boundary
crossings are masked out of the action set; interior walls can be
*attempted* but bounce the robot back with a penalty. Because "grab the
treasure, then leave" is not Markov on position alone, the state is the
cell position plus a treasure-collected flag (so a WxH maze has 2*W*H
states).

Everything here is a pure function over immutable values; callers own
all randomness.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterator, NamedTuple

CONFIG_SCHEMA_VERSION = 1


class MazeError(ValueError):
    pass


class MaskedActionError(MazeError):
    """Raised when a boundary-crossing action is forced on the env."""


class TerminalStateError(MazeError):
    """Raised when stepping or selecting actions in a finished episode."""


class InvalidConfigError(MazeError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid maze config: " + "; ".join(problems))
        self.problems = problems


class GridPos(NamedTuple):
    row: int
    col: int


class Action(IntEnum):
    """The four moves, with a stable 0..3 encoding used for table columns."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def letter(self) -> str:
        return _LETTERS[self]

    @classmethod
    def from_letter(cls, letter: str) -> "Action":
        for action, l in _LETTERS.items():
            if l == letter:
                return action
        raise MazeError(f"unknown direction letter {letter!r}")

    @classmethod
    def from_name(cls, name: str) -> "Action":
        try:
            return cls[name.upper()]
        except KeyError:
            raise MazeError(f"unknown action {name!r}") from None


ACTION_ORDER: tuple[Action, ...] = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)

_DELTAS: dict[Action, tuple[int, int]] = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}

_LETTERS: dict[Action, str] = {
    Action.UP: "U",
    Action.DOWN: "D",
    Action.LEFT: "L",
    Action.RIGHT: "R",
}


class StepEvent(Enum):
    STEP = "step"
    WALL_HIT = "wall_hit"
    TREASURE_FOUND = "treasure_found"
    EXIT_REACHED = "exit_reached"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class WallEdge:
    """Undirected blocked edge between two 4-adjacent cells.

    The endpoints are stored in lexicographic order so equal edges are
    equal values no matter how they were written down.
    """

    a: GridPos
    b: GridPos

    def __post_init__(self):
        a, b = GridPos(*self.a), GridPos(*self.b)
        if b < a:
            a, b = b, a
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def touches(self, pos: GridPos) -> bool:
        return self.a == pos or self.b == pos


@dataclass(frozen=True)
class RewardSpec:
    treasure: float = 20.0
    exit: float = 30.0
    wall: float = -10.0
    step: float = -1.0


@dataclass(frozen=True)
class MazeConfig:
    width: int = 3
    height: int = 3
    start: GridPos = GridPos(0, 0)
    treasure: GridPos = GridPos(2, 0)
    exit: GridPos = GridPos(2, 2)
    walls: frozenset[WallEdge] = field(
        default_factory=lambda: frozenset(
            {
                WallEdge(GridPos(0, 1), GridPos(1, 1)),
                WallEdge(GridPos(1, 1), GridPos(1, 2)),
            }
        )
    )
    rewards: RewardSpec = field(default_factory=RewardSpec)
    max_steps_per_episode: int = 100

    def in_bounds(self, pos: GridPos) -> bool:
        return 0 <= pos.row < self.height and 0 <= pos.col < self.width

    @property
    def num_cells(self) -> int:
        return self.width * self.height

    @property
    def num_states(self) -> int:
        # position x treasure-collected flag
        return 2 * self.num_cells

    def cells(self) -> Iterator[GridPos]:
        for row in range(self.height):
            for col in range(self.width):
                yield GridPos(row, col)

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "kind": "maze",
            "width": self.width,
            "height": self.height,
            "start": list(self.start),
            "treasure": list(self.treasure),
            "exit": list(self.exit),
            "walls": sorted([list(w.a), list(w.b)] for w in self.walls),
            "rewards": {
                "treasure": self.rewards.treasure,
                "exit": self.rewards.exit,
                "wall": self.rewards.wall,
                "step": self.rewards.step,
            },
            "max_steps_per_episode": self.max_steps_per_episode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MazeConfig":
        if not isinstance(data, dict):
            raise InvalidConfigError(["config document must be a JSON object"])
        version = data.get("schema_version")
        if version != CONFIG_SCHEMA_VERSION:
            raise InvalidConfigError(
                [f"schema_version {version!r} not supported (expected {CONFIG_SCHEMA_VERSION})"]
            )
        known = {
            "schema_version",
            "kind",
            "width",
            "height",
            "start",
            "treasure",
            "exit",
            "walls",
            "rewards",
            "max_steps_per_episode",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfigError([f"unknown field {name!r}" for name in unknown])
        reward_data = data.get("rewards", {})
        known_rewards = {"treasure", "exit", "wall", "step"}
        unknown_rewards = sorted(set(reward_data) - known_rewards)
        if unknown_rewards:
            raise InvalidConfigError(
                [f"unknown reward field {name!r}" for name in unknown_rewards]
            )
        try:
            config = cls(
                width=int(data.get("width", 3)),
                height=int(data.get("height", 3)),
                start=GridPos(*data["start"]) if "start" in data else GridPos(0, 0),
                treasure=GridPos(*data["treasure"]) if "treasure" in data else GridPos(2, 0),
                exit=GridPos(*data["exit"]) if "exit" in data else GridPos(2, 2),
                walls=frozenset(
                    WallEdge(GridPos(*a), GridPos(*b)) for a, b in data.get("walls", [])
                ),
                rewards=RewardSpec(
                    treasure=float(reward_data.get("treasure", 20.0)),
                    exit=float(reward_data.get("exit", 30.0)),
                    wall=float(reward_data.get("wall", -10.0)),
                    step=float(reward_data.get("step", -1.0)),
                ),
                max_steps_per_episode=int(data.get("max_steps_per_episode", 100)),
            )
        except (TypeError, ValueError) as exc:
            raise InvalidConfigError([f"malformed field: {exc}"]) from exc
        problems = validate_config(config)
        if problems:
            raise InvalidConfigError(problems)
        return config

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass(frozen=True, slots=True)
class EnvState:
    pos: GridPos
    treasure_collected: bool = False
    steps_taken: int = 0
    done: bool = False


@dataclass(frozen=True, slots=True)
class StepOutcome:
    next: EnvState
    reward: float
    event: StepEvent


def reset(config: MazeConfig) -> EnvState:
    return EnvState(pos=config.start)


def legal_actions(state: EnvState, config: MazeConfig) -> tuple[Action, ...]:
    """Actions whose target cell stays on the grid, in U,D,L,R order.

    Interior walls do not mask anything: the robot may aim at a wall and
    bounce. Raises on terminal states, which have no action set.
    """
    if state.done:
        raise TerminalStateError("no actions in terminal state")
    row, col = state.pos
    out = []
    for action in ACTION_ORDER:
        dr, dc = _DELTAS[action]
        if 0 <= row + dr < config.height and 0 <= col + dc < config.width:
            out.append(action)
    return tuple(out)


def step(state: EnvState, action: Action, config: MazeConfig) -> StepOutcome:
    """One deterministic transition.

    Exactly one of the four configured rewards is emitted per step; precedence
    is wall > treasure > exit > plain step (treasure and exit are
    distinct cells, so the last three never actually compete).
    """
    if state.done:
        raise TerminalStateError("cannot step a terminal state")
    row, col = state.pos
    dr, dc = _DELTAS[action]
    target = GridPos(row + dr, col + dc)
    if not config.in_bounds(target):
        raise MaskedActionError("masked action")

    steps = state.steps_taken + 1
    flag = state.treasure_collected
    if WallEdge(state.pos, target) in config.walls:
        next_pos = state.pos
        reward, event = config.rewards.wall, StepEvent.WALL_HIT
    else:
        next_pos = target
        if target == config.treasure and not flag:
            flag = True
            reward, event = config.rewards.treasure, StepEvent.TREASURE_FOUND
        elif target == config.exit:
            reward, event = config.rewards.exit, StepEvent.EXIT_REACHED
        else:
            reward, event = config.rewards.step, StepEvent.STEP

    done = event is StepEvent.EXIT_REACHED
    if not done and steps >= config.max_steps_per_episode:
        done = True
        event = StepEvent.TIMEOUT
    return StepOutcome(EnvState(next_pos, flag, steps, done), reward, event)


def state_index(state: EnvState, config: MazeConfig) -> int:
    """Bijection onto 0 .. 2*W*H-1; the flag selects the upper half."""
    base = config.num_cells if state.treasure_collected else 0
    return base + state.pos.row * config.width + state.pos.col


def index_to_state(index: int, config: MazeConfig) -> EnvState:
    """Inverse of state_index (steps_taken comes back as 0)."""
    if not 0 <= index < config.num_states:
        raise MazeError(f"state index {index} out of range")
    flag = index >= config.num_cells
    cell = index % config.num_cells
    pos = GridPos(cell // config.width, cell % config.width)
    return EnvState(pos, flag, 0, done=pos == config.exit)


def is_terminal_index(index: int, config: MazeConfig) -> bool:
    return index_to_state(index, config).pos == config.exit


def reachable_cells(config: MazeConfig, origin: GridPos) -> set[GridPos]:
    """Cells reachable from origin by legal moves, honoring walls (BFS)."""
    seen = {origin}
    frontier = [origin]
    while frontier:
        pos = frontier.pop()
        for dr, dc in _DELTAS.values():
            nxt = GridPos(pos.row + dr, pos.col + dc)
            if not config.in_bounds(nxt) or nxt in seen:
                continue
            if WallEdge(pos, nxt) in config.walls:
                continue
            seen.add(nxt)
            frontier.append(nxt)
    return seen


def validate_config(config: MazeConfig) -> list[str]:
    """Every invariant violation, not just the first. Empty list == valid."""
    problems: list[str] = []
    if config.width < 1 or config.height < 1:
        problems.append("grid dimensions must be positive")
        return problems
    if config.max_steps_per_episode < 1:
        problems.append("max_steps_per_episode must be positive")

    for name, cell in (("start", config.start), ("treasure", config.treasure), ("exit", config.exit)):
        if not config.in_bounds(cell):
            problems.append(f"{name} cell {tuple(cell)} is out of bounds")
    specials = [config.start, config.treasure, config.exit]
    if len(set(specials)) != len(specials):
        problems.append("special cells must be distinct")

    for wall in sorted(config.walls, key=lambda w: (w.a, w.b)):
        if not (config.in_bounds(wall.a) and config.in_bounds(wall.b)):
            problems.append(f"wall {tuple(wall.a)}-{tuple(wall.b)} references an out-of-bounds cell")
        elif abs(wall.a.row - wall.b.row) + abs(wall.a.col - wall.b.col) != 1:
            problems.append(f"wall {tuple(wall.a)}-{tuple(wall.b)} does not join adjacent cells")

    if not problems:
        for name, origin in (("start", config.start), ("treasure", config.treasure)):
            if config.exit not in reachable_cells(config, origin):
                problems.append(f"exit unreachable from {name}")
    return problems


def load_config(path: str) -> MazeConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return MazeConfig.from_dict(data)


def save_config(config: MazeConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
