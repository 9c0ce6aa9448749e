"""Gaussian graphical model utilities: sufficient statistic, sampling, scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .graph import Graph, NotPositiveDefiniteError

__all__ = [
    "SufficientStatistic",
    "sufficient_statistic",
    "stats_close",
    "mvn_sample",
    "standardize_to_unit_variances",
    "kl_lower_bound",
]


@dataclass(frozen=True)
class SufficientStatistic:
    """Column sums and the Gram entries on the diagonal and graph edges.

    ``gram_entries`` is keyed by ``(i, j)`` with ``i <= j``.
    """

    column_sums: np.ndarray
    gram_entries: dict[tuple[int, int], float]

    def as_vector(self) -> np.ndarray:
        keys = sorted(self.gram_entries)
        return np.concatenate([self.column_sums, [self.gram_entries[k] for k in keys]])


def _check_shape(x: np.ndarray, g: Graph) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != g.p:
        raise ValueError(f"data must be n x {g.p}, got shape {x.shape}")
    return x


def sufficient_statistic(x, g: Graph) -> SufficientStatistic:
    x = _check_shape(x, g)
    gram = x.T @ x
    keys = [(i, i) for i in range(g.p)] + g.edges()
    return SufficientStatistic(
        column_sums=x.sum(axis=0),
        gram_entries={k: float(gram[k]) for k in keys},
    )


def stats_close(a: SufficientStatistic, b: SufficientStatistic, rtol: float = 1e-8) -> bool:
    """Entrywise agreement relative to the overall magnitude of the statistic.

    Column sums are compared on the scale ``sqrt(n * max diag Gram)`` (their
    natural size) and Gram entries on the scale of the largest diagonal entry,
    so near-zero entries do not demand impossible relative precision.
    """
    if a.gram_entries.keys() != b.gram_entries.keys() or a.column_sums.shape != b.column_sums.shape:
        raise KeyError("sufficient statistics belong to different graphs")
    diag = max(
        max((abs(v) for (i, j), v in a.gram_entries.items() if i == j), default=0.0),
        max((abs(v) for (i, j), v in b.gram_entries.items() if i == j), default=0.0),
        1e-300,
    )
    for k, va in a.gram_entries.items():
        if abs(va - b.gram_entries[k]) > rtol * diag:
            return False
    sum_scale = max(np.max(np.abs(a.column_sums), initial=0.0), np.sqrt(diag), 1e-300)
    return bool(np.all(np.abs(a.column_sums - b.column_sums) <= rtol * sum_scale))


def mvn_sample(n: int, mean, precision, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` rows from ``N(mean, precision^{-1})``.

    With ``precision = L L^T`` each row is ``mean + L^{-T} z``.
    """
    precision = np.asarray(precision, dtype=float)
    p = precision.shape[0]
    try:
        chol = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("precision matrix is not positive definite") from exc
    z = rng.standard_normal((p, n))
    x = sla.solve_triangular(chol, z, lower=True, trans="T").T
    return x + np.broadcast_to(np.asarray(mean, dtype=float), (p,))


def standardize_to_unit_variances(precision) -> np.ndarray:
    """Rescale so that the implied covariance has unit diagonal.

    Uses ``D Omega D`` with ``D = diag(Sigma)^{1/2}``, which keeps the
    zero pattern exactly.
    """
    precision = np.asarray(precision, dtype=float)
    try:
        cho = sla.cho_factor(precision, lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefiniteError("precision matrix is not positive definite") from exc
    sigma = sla.cho_solve(cho, np.eye(precision.shape[0]))
    d = np.sqrt(np.diag(sigma))
    out = precision * d[:, None] * d[None, :]
    return (out + out.T) / 2


def kl_lower_bound(s: float) -> float:
    """``-log(1 - s^2) / 2``: KL separation of a band model with signal ``s``."""
    if not abs(s) < 1:
        raise ValueError("need |s| < 1")
    return float(-0.5 * np.log1p(-s * s))
