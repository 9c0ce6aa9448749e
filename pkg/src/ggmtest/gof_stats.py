"""Goodness-of-fit statistics for a hypothesised graph.

All statistics accept one ``(n, p)`` data matrix or a stack ``(B, n, p)``;
a stack returns one value per matrix.  Every regression on ``[1, X_S]`` is
evaluated through the centred Gram matrix: the residual inner products of
columns ``a`` and ``b`` after projecting out ``[1, X_S]`` form the Schur
complement ``C_ab - C_aS C_SS^{-1} C_Sb``.  This lets the observed data and
all of its copies share each linear solve.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special as sc

from . import glasso
from .graph import Graph
from .linalg import least_squares, projection_difference_sq

__all__ = [
    "StatKind",
    "GofStatistic",
    "PairQuantities",
    "prc",
    "erc",
    "prc_pairs",
    "erc_pairs",
    "fisher_phi",
    "f_sum",
    "f_max",
    "f_sum_local",
    "glr_l1",
    "Z_CLAMP",
    "PHI_SENTINEL",
]

Z_CLAMP = 38.0
PHI_SENTINEL = 1e18
GAMMA_CLAMP = 1.0 - 1e-12
# max number of floats gathered at once when batching pair sub-blocks
_GATHER_LIMIT = 4_000_000


class StatKind(str, Enum):
    PRC = "PRC"
    ERC = "ERC"
    PRC_W = "PRC_W"
    ERC_W = "ERC_W"
    F_SUM = "F_SUM"
    F_MAX = "F_MAX"
    F_SUM_LOCAL = "F_SUM_LOCAL"
    GLR_L1 = "GLR_L1"


def _stack(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        return x[None], True
    if x.ndim != 3:
        raise ValueError("expected an (n, p) matrix or a (B, n, p) stack")
    return x, False


def _check(xs: np.ndarray, g: Graph) -> None:
    if xs.shape[2] != g.p:
        raise ValueError(f"data has {xs.shape[2]} columns, graph has {g.p} nodes")


def _out(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


def centered_gram(xs: np.ndarray) -> np.ndarray:
    xc = xs - xs.mean(axis=1, keepdims=True)
    return np.einsum("bni,bnj->bij", xc, xc)


def _zscores(pvals: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        z = -sc.ndtri(pvals / 2.0)
    return np.minimum(z, Z_CLAMP)


# ---------------------------------------------------------------------------
# pairwise residual correlations


@dataclass
class PairQuantities:
    """Per non-edge quantities; arrays are ``(B, P)`` over usable pairs."""

    pairs: list[tuple[int, int]]
    df: np.ndarray
    gamma: np.ndarray
    score: np.ndarray  # t statistic (PRC) or Fisher-transformed value (ERC)
    pvalue: np.ndarray
    z: np.ndarray
    skipped: list[tuple[int, int]] = field(default_factory=list)


def _prc_core(gram: np.ndarray, n: int, g: Graph) -> PairQuantities:
    b = gram.shape[0]
    groups: dict[int, list[tuple[int, int, list[int]]]] = defaultdict(list)
    skipped = []
    for i, j in g.non_edges():
        u = sorted(set(g.neighbors[i]) | set(g.neighbors[j]))
        if n > len(u) + 2:
            groups[len(u)].append((i, j, u))
        else:
            skipped.append((i, j))
    pairs, dfs, gammas = [], [], []
    for u, items in sorted(groups.items()):
        idx_all = np.array([[i, j, *nb] for i, j, nb in items], dtype=int)
        chunk = max(1, _GATHER_LIMIT // (b * (u + 2) ** 2))
        for start in range(0, len(items), chunk):
            idx = idx_all[start : start + chunk]
            sub = gram[:, idx[:, :, None], idx[:, None, :]]
            c = sub[..., :2, :2]
            if u:
                c = c - sub[..., :2, 2:] @ np.linalg.solve(sub[..., 2:, 2:], sub[..., 2:, :2])
            gammas.append(c[..., 0, 1] / np.sqrt(c[..., 0, 0] * c[..., 1, 1]))
        pairs.extend((i, j) for i, j, _ in items)
        dfs.extend([n - 2 - u] * len(items))
    df = np.array(dfs, dtype=float)
    gamma = np.clip(np.concatenate(gammas, axis=1), -GAMMA_CLAMP, GAMMA_CLAMP) if gammas else np.zeros((b, 0))
    t = np.sqrt(df) * gamma / np.sqrt(1.0 - gamma**2)
    pval = 2.0 * sc.stdtr(df, -np.abs(t))
    return PairQuantities(pairs, df, gamma, t, pval, _zscores(pval), skipped)


def _node_residual_gram(gram: np.ndarray, g: Graph) -> np.ndarray:
    """Gram matrix of the residuals of each column on ``[1, X_{N_i}]``."""
    b, p, _ = gram.shape
    w = np.broadcast_to(np.eye(p), (b, p, p)).copy()
    by_degree: dict[int, list[int]] = defaultdict(list)
    for i in range(p):
        if g.neighbors[i]:
            by_degree[len(g.neighbors[i])].append(i)
    for d, nodes in by_degree.items():
        nodes_a = np.array(nodes)
        nb = np.array([g.neighbors[i] for i in nodes], dtype=int)
        s_nn = gram[:, nb[:, :, None], nb[:, None, :]]
        s_ni = gram[:, nb, nodes_a[:, None]]
        coef = np.linalg.solve(s_nn, s_ni[..., None])[..., 0]  # (B, P_d, d)
        w[:, nb, nodes_a[:, None]] = -coef
    return np.swapaxes(w, 1, 2) @ gram @ w


def _erc_core(gram: np.ndarray, n: int, g: Graph) -> PairQuantities:
    b = gram.shape[0]
    rg = _node_residual_gram(gram, g)
    pairs, dfs, skipped = [], [], []
    for i, j in g.non_edges():
        u = min(len(g.neighbors[i]), len(g.neighbors[j]))
        if n > u + 2:
            pairs.append((i, j))
            dfs.append(n - 2 - u)
        else:
            skipped.append((i, j))
    df = np.array(dfs, dtype=float)
    if pairs:
        ii, jj = np.array(pairs).T
        gamma = rg[:, ii, jj] / np.sqrt(rg[:, ii, ii] * rg[:, jj, jj])
        gamma = np.clip(gamma, -GAMMA_CLAMP, GAMMA_CLAMP)
    else:
        gamma = np.zeros((b, 0))
    xi = np.sqrt(df) / 2.0 * np.log((1.0 + gamma) / (1.0 - gamma))
    pval = 2.0 * sc.ndtr(-np.abs(xi))
    return PairQuantities(pairs, df, gamma, xi, pval, _zscores(pval), skipped)


def _weight_vector(weights, pairs) -> np.ndarray:
    if weights is None:
        return np.ones(len(pairs))
    w = np.asarray(weights, dtype=float)
    if not pairs:
        return np.ones(0)
    ii, jj = np.array(pairs).T
    vals = w[ii, jj]
    if np.any(np.isnan(vals)):
        raise ValueError("weight matrix is missing entries for some unconnected pairs")
    return vals


def _truncated_sum(q: PairQuantities, delta: float, weights) -> np.ndarray:
    if not 0 < delta < 1:
        raise ValueError("truncation level must lie in (0, 1)")
    w = _weight_vector(weights, q.pairs)
    keep = q.pvalue <= delta
    return np.sum(np.where(keep, w * q.z**2, 0.0), axis=1)


def prc_pairs(x, g: Graph) -> PairQuantities:
    """Pairwise residual correlations ``gamma``, t statistics and p-values."""
    xs, _ = _stack(x)
    _check(xs, g)
    return _prc_core(centered_gram(xs), xs.shape[1], g)


def erc_pairs(x, g: Graph) -> PairQuantities:
    xs, _ = _stack(x)
    _check(xs, g)
    return _erc_core(centered_gram(xs), xs.shape[1], g)


def prc(x, g: Graph, delta: float = 0.05, weights=None):
    """Sum of squared z-scores of the significant pairwise residual correlations.

    Each unconnected pair ``(i, j)`` regresses both columns on the union of
    their neighbourhoods; pairs with ``n <= |N_i u N_j| + 2`` are skipped.
    ``weights`` (a symmetric ``p x p`` array) gives the weighted variant.
    """
    xs, single = _stack(x)
    _check(xs, g)
    q = _prc_core(centered_gram(xs), xs.shape[1], g)
    return _out(_truncated_sum(q, delta, weights), single)


def erc(x, g: Graph, delta: float = 0.05, weights=None):
    """Like :func:`prc` but each column is regressed on its own neighbourhood
    only and correlations are Fisher-transformed."""
    xs, single = _stack(x)
    _check(xs, g)
    q = _erc_core(centered_gram(xs), xs.shape[1], g)
    return _out(_truncated_sum(q, delta, weights), single)


# ---------------------------------------------------------------------------
# conditional regression F statistics


def fisher_phi(x, i: int, neighbors: Sequence[int], added: Sequence[int]) -> float:
    """Classical F statistic for adding columns ``added`` to the regression of
    column ``i`` on ``[1, X_{neighbors}]``.

    Returns ``PHI_SENTINEL`` when the enlarged model fits exactly.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    neighbors, added = list(neighbors), list(added)
    h = len(neighbors) + 1
    if not added:
        raise ValueError("the added set must be non-empty")
    if not n > h + len(added):
        raise ValueError(f"need n > |N_i| + 1 + |A|, got n={n}")
    y = x[:, i]
    inner = x[:, neighbors] if neighbors else None
    outer = x[:, neighbors + added]
    num = projection_difference_sq(y, inner, outer) / len(added)
    rss = float(np.sum(least_squares(y, outer).residual ** 2))
    if rss < 1e-14 * max(num, float(np.sum((y - y.mean()) ** 2)), 1e-300):
        return PHI_SENTINEL
    return num / (rss / (n - h - len(added)))


def _phi_by_node(gram: np.ndarray, n: int, g: Graph, nodes: Iterable[int]):
    """Yield ``(i, phi)`` with ``phi`` of shape ``(B, |B_i|)`` for singleton additions."""
    for i in nodes:
        nb = list(g.neighbors[i])
        cand = [a for a in range(g.p) if a != i and a not in g.neighbors[i]]
        if not cand:
            continue
        d = len(nb)
        if not n > d + 2:
            raise ValueError(f"need n > |N_i| + 2 at node {i}, got n={n}, |N_i|={d}")
        cols = np.array([i, *cand])
        g_icols = gram[:, i, cols]
        g_diag = gram[:, cand, cand]
        if d:
            nb_a = np.array(nb)
            s_nn = gram[:, nb_a[:, None], nb_a[None, :]]
            s_ncols = gram[:, nb_a[:, None], cols[None, :]]
            coef = np.linalg.solve(s_nn, s_ncols)  # (B, d, c)
            g_icols = g_icols - np.einsum("bk,bkc->bc", gram[:, i, nb_a], coef)
            g_diag = g_diag - np.einsum("bkc,bkc->bc", s_ncols[:, :, 1:], coef[:, :, 1:])
        rss_small = g_icols[:, :1]
        cross = g_icols[:, 1:]
        scale = np.maximum(rss_small, 1e-300)
        ok = g_diag > 1e-13 * np.maximum(gram[:, cand, cand], 1e-300)
        num = np.where(ok, cross**2 / np.where(ok, g_diag, 1.0), 0.0)
        rss_big = rss_small - num
        perfect = rss_big < 1e-14 * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = num / (rss_big / (n - d - 2))
        phi = np.where(perfect, PHI_SENTINEL, np.maximum(phi, 0.0))
        yield i, phi


def _f_stats(x, g: Graph, nodes=None, reduce="sum"):
    xs, single = _stack(x)
    _check(xs, g)
    gram = centered_gram(xs)
    nodes = range(g.p) if nodes is None else sorted(set(int(i) for i in nodes))
    total = np.zeros(xs.shape[0])
    for _, phi in _phi_by_node(gram, xs.shape[1], g, nodes):
        if reduce == "sum":
            total += phi.sum(axis=1)
        else:
            total = np.maximum(total, phi.max(axis=1))
    return _out(total, single)


def f_sum(x, g: Graph):
    """Sum over nodes and unconnected candidates of the singleton-addition F statistic."""
    return _f_stats(x, g)


def f_max(x, g: Graph):
    """Largest singleton-addition F statistic (0 when no candidate exists)."""
    return _f_stats(x, g, reduce="max")


def f_sum_local(x, g: Graph, nodes: Iterable[int]):
    """:func:`f_sum` restricted to the response nodes in ``nodes``."""
    return _f_stats(x, g, nodes=nodes)


# ---------------------------------------------------------------------------
# penalised likelihood ratio


def glr_l1(x, g: Graph, lam: float | None = None, tol: float = 1e-4, max_iter: int = 200):
    """``n (log det W - tr(S W))`` at the graph-aware graphical lasso fit ``W``.

    ``S`` is the maximum-likelihood covariance (divisor ``n``).  Only entries
    off the graph are penalised, with weight ``lam * sqrt(S_ii S_jj)``;
    ``lam`` defaults to ``sqrt(log p / n)``.  Every matrix of a stack is
    solved from the same cold start, so each value depends on its own matrix
    only (values of copies nearly tie, and a shared warm start would shift
    solver error between the observed matrix and its copies).
    """
    xs, single = _stack(x)
    _check(xs, g)
    n = xs.shape[1]
    if lam is None:
        lam = glasso.default_lambda(g.p, n)
    covs = centered_gram(xs) / n
    out = np.empty(xs.shape[0])
    for k, s in enumerate(covs):
        res = glasso.solve(glasso.GlassoProblem(s, lam, g, tol=tol, max_iter=max_iter))
        out[k] = glasso.profile_loglik(s, res.precision, n)
    return _out(out, single)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GofStatistic:
    """A named goodness-of-fit statistic with its tuning constants.

    ``weights`` is required for the weighted kinds and ``local_set`` for
    ``F_SUM_LOCAL``.
    """

    kind: StatKind = StatKind.F_SUM
    delta: float = 0.05
    weights: np.ndarray | None = None
    local_set: tuple[int, ...] | None = None
    glasso_lambda: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StatKind(self.kind))
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.kind in (StatKind.PRC_W, StatKind.ERC_W):
            if self.weights is None:
                raise ValueError(f"{self.kind.value} needs a weight matrix")
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise ValueError("weights must be a square matrix")
            if not np.allclose(np.nan_to_num(w), np.nan_to_num(w.T)):
                raise ValueError("weights must be symmetric")
            if np.any(w[~np.isnan(w)] < 0):
                raise ValueError("weights must be nonnegative")
            object.__setattr__(self, "weights", w)
        if self.kind is StatKind.F_SUM_LOCAL:
            if self.local_set is None:
                raise ValueError("F_SUM_LOCAL needs a local node set")
            object.__setattr__(self, "local_set", tuple(sorted(set(self.local_set))))
        if self.glasso_lambda is not None and not self.glasso_lambda > 0:
            raise ValueError("glasso lambda must be positive")

    @property
    def name(self) -> str:
        return self.kind.value

    def __call__(self, x, g: Graph):
        k = self.kind
        if k is StatKind.PRC:
            return prc(x, g, self.delta)
        if k is StatKind.ERC:
            return erc(x, g, self.delta)
        if k is StatKind.PRC_W:
            return prc(x, g, self.delta, self.weights)
        if k is StatKind.ERC_W:
            return erc(x, g, self.delta, self.weights)
        if k is StatKind.F_SUM:
            return f_sum(x, g)
        if k is StatKind.F_MAX:
            return f_max(x, g)
        if k is StatKind.F_SUM_LOCAL:
            return f_sum_local(x, g, self.local_set)
        return glr_l1(x, g, self.glasso_lambda)

    def diagnostics(self, x, g: Graph) -> list[str]:
        """Warnings about pairs dropped for lack of degrees of freedom."""
        if self.kind not in (StatKind.PRC, StatKind.ERC, StatKind.PRC_W, StatKind.ERC_W):
            return []
        q = prc_pairs(x, g) if self.kind in (StatKind.PRC, StatKind.PRC_W) else erc_pairs(x, g)
        out = []
        if q.skipped:
            out.append(f"{len(q.skipped)} unconnected pairs skipped (n too small)")
        if not q.pairs and q.skipped:
            out.append("no usable pair: statistic is identically 0")
        return out
