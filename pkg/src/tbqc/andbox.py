"""Ideal two-party AND functionality returning XOR shares of a·b."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np


@dataclass(frozen=True)
class AndBoxRecord:
    call_id: int
    a: int
    b: int
    alpha: int
    beta: int


class AndBox(Protocol):
    def call(self, a: int, b: int) -> tuple[int, int]: ...


@dataclass
class IdealAndBox:
    """Trusted functionality: alpha is a fresh uniform bit, beta = alpha ^ (a & b).

    Inputs are kept in ``log`` for test introspection only; parties never see it.
    """

    rng: np.random.Generator
    log: list[AndBoxRecord] = field(default_factory=list)

    def call(self, a: int, b: int) -> tuple[int, int]:
        if a not in (0, 1) or b not in (0, 1):
            raise ValueError(f"AND-BOX inputs must be bits, got ({a}, {b})")
        alpha = int(self.rng.integers(0, 2))
        beta = alpha ^ (a & b)
        self.log.append(AndBoxRecord(len(self.log), a, b, alpha, beta))
        return alpha, beta

    @property
    def calls(self) -> int:
        return len(self.log)


@dataclass
class ScriptedAndBox:
    """AND-BOX whose alpha shares are supplied up front (for exhaustive analysis)."""

    alphas: list[int]
    log: list[AndBoxRecord] = field(default_factory=list)

    def call(self, a: int, b: int) -> tuple[int, int]:
        if len(self.log) >= len(self.alphas):
            raise RuntimeError("scripted AND-BOX ran out of shares")
        alpha = int(self.alphas[len(self.log)])
        beta = alpha ^ (a & b)
        self.log.append(AndBoxRecord(len(self.log), a, b, alpha, beta))
        return alpha, beta

    @property
    def calls(self) -> int:
        return len(self.log)


def call(a: int, b: int, rng: np.random.Generator) -> tuple[int, int]:
    """One-shot call without a session log."""
    return IdealAndBox(rng).call(a, b)
