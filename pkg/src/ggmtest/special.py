"""Normal, Student-t and F distribution functions.

Thin, vectorised wrappers over :mod:`scipy.special` with the domain checks
and tail conventions the test statistics rely on.  All functions accept
scalars or arrays and return the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sc

__all__ = [
    "DistParams",
    "normal_cdf",
    "normal_inv_cdf",
    "student_t_cdf",
    "f_cdf",
    "f_sf",
    "f_upper_quantile",
]


@dataclass(frozen=True)
class DistParams:
    """Degrees of freedom of a t (``df2`` unused) or F distribution."""

    df1: float
    df2: float | None = None

    def __post_init__(self) -> None:
        if not self.df1 > 0:
            raise ValueError(f"degrees of freedom must be positive, got {self.df1}")
        if self.df2 is not None and not self.df2 > 0:
            raise ValueError(f"degrees of freedom must be positive, got {self.df2}")


def _scalar_or_array(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def _check_df(*dfs) -> None:
    for df in dfs:
        if np.any(~(np.asarray(df, dtype=float) > 0)):
            raise ValueError("degrees of freedom must be positive")


def _check_open_unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("probability argument must lie strictly inside (0, 1)")
    return u


def normal_cdf(x):
    """Standard normal CDF; saturates to exactly 0 or 1 in the far tails."""
    return _scalar_or_array(sc.ndtr(np.asarray(x, dtype=float)))


def normal_inv_cdf(u):
    """Standard normal quantile function on (0, 1)."""
    return _scalar_or_array(sc.ndtri(_check_open_unit(u)))


def student_t_cdf(x, df):
    _check_df(df)
    return _scalar_or_array(sc.stdtr(np.asarray(df, dtype=float), np.asarray(x, dtype=float)))


def f_cdf(q, d1, d2):
    _check_df(d1, d2)
    q = np.maximum(np.asarray(q, dtype=float), 0.0)
    return _scalar_or_array(sc.fdtr(d1, d2, q))


def f_sf(q, d1, d2):
    """Upper tail ``P(F > q)`` of the F(d1, d2) distribution."""
    _check_df(d1, d2)
    q = np.maximum(np.asarray(q, dtype=float), 0.0)
    return _scalar_or_array(sc.fdtrc(d1, d2, q))


def f_upper_quantile(u, d1, d2):
    """Return ``q`` with ``P(F(d1, d2) > q) = u``.

    Inverts the incomplete beta directly, ``P(F > q) = I_x(d2/2, d1/2)`` with
    ``x = d2 / (d2 + d1 q)``, which keeps full relative accuracy for the tiny
    upper-tail levels a Bonferroni split produces.
    """
    u = _check_open_unit(u)
    _check_df(d1, d2)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    x = sc.betaincinv(d2 / 2.0, d1 / 2.0, u)
    return _scalar_or_array(d2 * (1.0 - x) / (d1 * x))
