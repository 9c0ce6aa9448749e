"""Least-squares kernels with an implicit intercept column.

Every regression in the package is of a response on ``[1_n, X_S]`` for some
column subset ``S``.  The intercept is always prepended here, callers only
pass the non-constant design columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

__all__ = [
    "LsFit",
    "least_squares",
    "projection_difference_sq",
    "with_intercept",
    "RANK_TOL",
]

# pivot column dropped when its remaining norm falls below RANK_TOL * largest initial norm
RANK_TOL = 1e-12


@dataclass(frozen=True)
class LsFit:
    fitted: np.ndarray
    residual: np.ndarray
    rank: int
    design_cols: int
    coef: np.ndarray  # intercept first; zeros for columns dropped as collinear
    kept: np.ndarray  # indices (into [1, design]) of columns that entered the fit


def with_intercept(design: np.ndarray | None, n: int) -> np.ndarray:
    if design is None:
        return np.ones((n, 1))
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    if design.shape[0] != n:
        raise ValueError(f"design has {design.shape[0]} rows, response has {n}")
    return np.column_stack([np.ones(n), design])


def _pivoted_basis(d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal basis of span(d) from column-pivoted QR, plus kept columns."""
    q, r, piv = sla.qr(d, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = np.max(np.linalg.norm(d, axis=0)) if d.size else 0.0
    if scale == 0.0:
        return q[:, :0], r[:0, :0], piv[:0]
    rank = int(np.sum(diag > RANK_TOL * scale))
    return q[:, :rank], r[:rank, :rank], piv[:rank]


def least_squares(response, design=None) -> LsFit:
    """Regress ``response`` on ``[1, design]``.

    ``design`` may be ``None`` or have zero columns, which gives the
    intercept-only fit (fitted values equal to the mean).
    """
    y = np.asarray(response, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("response must be a non-empty vector")
    n = y.size
    d = with_intercept(design, n)
    q, r, kept = _pivoted_basis(d)
    qty = q.T @ y
    fitted = q @ qty
    coef = np.zeros(d.shape[1])
    if kept.size:
        coef[kept] = sla.solve_triangular(r, qty)
    return LsFit(
        fitted=fitted,
        residual=y - fitted,
        rank=int(kept.size),
        design_cols=d.shape[1] - 1,
        coef=coef,
        kept=np.sort(kept),
    )


def projection_difference_sq(response, inner_cols=None, outer_cols=None) -> float:
    """``||P_outer y - P_inner y||^2`` for nested designs (intercept implicit).

    Computed as a difference of residual sums of squares; values within
    round-off below zero are clamped to 0.
    """
    y = np.asarray(response, dtype=float)
    rss_inner = float(np.sum(least_squares(y, inner_cols).residual ** 2))
    rss_outer = float(np.sum(least_squares(y, outer_cols).residual ** 2))
    return max(rss_inner - rss_outer, 0.0)
