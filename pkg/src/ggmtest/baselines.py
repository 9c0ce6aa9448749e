"""Classical goodness-of-fit baselines.

``bonf_gof`` applies a Bonferroni correction to the partial-correlation
p-values of all unconnected pairs.  ``m1p1_gof`` compares each
singleton-addition F statistic with its own Bonferroni-adjusted F quantile.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gof_stats import _phi_by_node, _stack, centered_gram, prc_pairs
from .graph import Graph
from .special import f_sf, f_upper_quantile

__all__ = ["BaselineResult", "bonf_gof", "m1p1_gof"]


@dataclass
class BaselineResult:
    """``statistic``/``threshold`` are set for M1P1 only; ``adjusted_pvalue`` for both.

    For M1P1 the adjusted p-value is ``min_i min_a p |B_i| P(F > phi_a)``,
    capped at 1, which rejects exactly when ``statistic > 0``.
    """

    method: str
    reject: bool
    adjusted_pvalue: float
    alpha: float
    statistic: float | None = None
    threshold: float | None = None
    details: dict = field(default_factory=dict)


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")


def bonf_gof(x, g: Graph, alpha: float = 0.05) -> BaselineResult:
    """Reject when ``min(1, K min p_ij) <= alpha``, ``K`` the number of unconnected pairs."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    k = len(g.non_edges())
    if k == 0:
        return BaselineResult("Bonf", False, 1.0, alpha, details={"pairs": 0})
    q = prc_pairs(x, g)
    if not q.pairs:
        raise ValueError("every unconnected pair violates n > |N_i u N_j| + 2")
    adj = min(1.0, k * float(np.min(q.pvalue[0])))
    return BaselineResult(
        "Bonf", adj <= alpha, adj, alpha, details={"pairs": k, "skipped": len(q.skipped)}
    )


def m1p1_gof(x, g: Graph, alpha: float = 0.05) -> BaselineResult:
    """Singleton-collection multiple F test.

    Node ``i`` uses level ``alpha / p`` split evenly over its ``|B_i| = p - h_i``
    candidates, where ``h_i = |N_i| + 1``.  The null is rejected when some
    ``phi_a`` exceeds the upper ``alpha / (p |B_i|)`` quantile of
    ``F(1, n - h_i - 1)``.
    """
    _check_alpha(alpha)
    xs, _ = _stack(x)
    n, p = xs.shape[1], g.p
    gram = centered_gram(xs)
    best = -np.inf
    best_threshold = None
    min_adj = 1.0
    for i, phi in _phi_by_node(gram, n, g, range(p)):
        phi = phi[0]
        b = phi.size
        d2 = n - g.degree(i) - 2
        thr = f_upper_quantile(alpha / (p * b), 1, d2)
        gap = float(np.max(phi)) - thr
        if gap > best:
            best, best_threshold = gap, thr
        min_adj = min(min_adj, p * b * float(np.min(f_sf(phi, 1, d2))))
    if best_threshold is None:
        return BaselineResult("M1P1", False, 1.0, alpha, statistic=-np.inf)
    return BaselineResult(
        "M1P1", best > 0, min(1.0, min_adj), alpha, statistic=best, threshold=best_threshold
    )
