"""Monte Carlo p-values from an observed statistic and its copies.

Ties are detected by exact float equality: the observed value and the copy
values come from the same deterministic function, so only genuinely discrete
statistics produce ties.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

__all__ = [
    "PvalueMode",
    "conservative_pvalue",
    "randomized_pvalue",
    "two_sided_pvalue",
    "compute_pvalue",
]


class PvalueMode(str, Enum):
    CONSERVATIVE = "conservative_one_sided"
    RANDOMIZED = "randomized_one_sided"
    TWO_SIDED = "randomized_two_sided"

    @classmethod
    def parse(cls, value: "PvalueMode | str") -> "PvalueMode":
        if isinstance(value, cls):
            return value
        aliases = {"cons": cls.CONSERVATIVE, "rand": cls.RANDOMIZED, "two": cls.TWO_SIDED}
        if value in aliases:
            return aliases[value]
        return cls(value)


def _copies(copies) -> np.ndarray:
    c = np.asarray(copies, dtype=float).ravel()
    if c.size == 0:
        raise ValueError("need at least one copy statistic")
    return c


def conservative_pvalue(t0: float, copies) -> float:
    """``(1 + #{T_m >= T_0}) / (M + 1)``."""
    c = _copies(copies)
    return (1 + int(np.sum(c >= t0))) / (c.size + 1)


def _tie_break(t0: float, c: np.ndarray, rng: np.random.Generator) -> int:
    kappa = int(np.sum(c == t0))
    return int(rng.integers(1, kappa + 2))


def randomized_pvalue(t0: float, copies, rng: np.random.Generator) -> float:
    """``(S + #{T_m > T_0}) / (M + 1)`` with ``S`` uniform on ``1..kappa+1``."""
    c = _copies(copies)
    s = _tie_break(t0, c, rng)
    return (s + int(np.sum(c > t0))) / (c.size + 1)


def two_sided_pvalue(t0: float, copies, rng: np.random.Generator) -> float:
    """``2/(M+1) * (S + min(#greater, #less))``, capped at 1."""
    c = _copies(copies)
    s = _tie_break(t0, c, rng)
    extreme = min(int(np.sum(c > t0)), int(np.sum(c < t0)))
    return min(1.0, 2.0 * (s + extreme) / (c.size + 1))


def compute_pvalue(
    t0: float, copies, mode: PvalueMode | str = PvalueMode.CONSERVATIVE, rng=None
) -> float:
    mode = PvalueMode.parse(mode)
    if mode is PvalueMode.CONSERVATIVE:
        return conservative_pvalue(t0, copies)
    if rng is None:
        raise ValueError(f"{mode.value} p-values need a random generator")
    if mode is PvalueMode.RANDOMIZED:
        return randomized_pvalue(t0, copies, rng)
    return two_sided_pvalue(t0, copies, rng)
