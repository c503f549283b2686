"""Counted random source.

Every stochastic choice in a training session consumes exactly one
uniform draw from a single seeded stream, so (seed, draw count) pins the
whole future of the session. Restoring a snapshot is just "reseed and
burn the recorded number of draws".

Draw order contract (one draw each, in this order, only when reached):
  1. explore test at ChooseAction (always drawn, even for epsilon 0/1);
  2. uniform pick among legal actions when exploring;
  3. uniform pick among tied argmax actions when exploiting with a tie.
Advised actions consume no draws.
"""

from __future__ import annotations

import random
from typing import Sequence, TypeVar

T = TypeVar("T")


class CountedRng:
    def __init__(self, seed: int, draws: int = 0):
        self.seed = int(seed)
        self._rng = random.Random(self.seed)
        self.draws = 0
        for _ in range(draws):
            self.uniform()

    def uniform(self) -> float:
        """One draw from [0, 1)."""
        self.draws += 1
        return self._rng.random()

    def chance(self, p: float) -> bool:
        return self.uniform() < p

    def pick(self, items: Sequence[T]) -> T:
        if not items:
            raise ValueError("cannot pick from an empty sequence")
        return items[int(self.uniform() * len(items))]

    def state(self) -> dict:
        return {"seed": self.seed, "draws": self.draws}

    @classmethod
    def from_state(cls, state: dict) -> "CountedRng":
        return cls(state["seed"], state["draws"])
