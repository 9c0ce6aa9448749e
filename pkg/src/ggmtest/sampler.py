"""Exchangeable copies of a data matrix under a Gaussian graphical model.

A column is resampled by *residual rotation*: keep its projection onto
``[1, X_{N_i}]`` and replace the residual by a uniformly random vector of the
same length in the same orthogonal complement.  Chaining rotations forward
along an order to a hub and then independently backward from the hub gives
copies that are exchangeable with the input under the null model.

The backward chains are advanced together as one ``(M, n, p)`` stack; each
chain draws its Gaussian noise from its own seed substream, so a copy depends
only on the hub and its chain index, never on ``M`` or on evaluation order.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .graph import Graph

__all__ = [
    "SamplerConfig",
    "SamplerPreconditionError",
    "derive_rng",
    "degree_order",
    "residual_rotation",
    "exchangeable_copies",
]

# relative threshold below which a residual is treated as zero
DEGENERATE_TOL = 1e-12


class SamplerPreconditionError(ValueError):
    """Raised when ``n <= 1 + |N_i|`` for a node that must be rotated."""


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for substream ``key`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


# substream keys under the master seed
FORWARD_STREAM = 0
CHAIN_STREAM = 1
PVALUE_STREAM = 2


@dataclass(frozen=True)
class SamplerConfig:
    """Settings for :func:`exchangeable_copies`.

    ``order`` is a sequence of distinct node ids to rotate (``None`` means all
    nodes in increasing order); columns outside it are never modified.
    """

    num_copies: int = 100
    iterations: int = 3
    order: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_copies < 1:
            raise ValueError("num_copies must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.order is not None:
            order = tuple(int(i) for i in self.order)
            if len(set(order)) != len(order):
                raise ValueError("order contains repeated nodes")
            object.__setattr__(self, "order", order)

    def resolve_order(self, p: int) -> tuple[int, ...]:
        order = tuple(range(p)) if self.order is None else self.order
        if any(not 0 <= i < p for i in order):
            raise ValueError(f"order has node ids outside [0, {p})")
        return order


def degree_order(g: Graph, nodes: Sequence[int] | None = None) -> tuple[int, ...]:
    """Nodes sorted by ascending degree (ties by id)."""
    nodes = range(g.p) if nodes is None else nodes
    return tuple(sorted(nodes, key=lambda i: (g.degree(i), i)))


def check_sample_size(n: int, g: Graph, order: Sequence[int]) -> None:
    worst = max((g.degree(i) for i in order), default=0)
    if not n > 1 + worst:
        raise SamplerPreconditionError(
            f"need n > 1 + max degree over rotated nodes, got n={n}, max degree={worst}"
        )


def _rotate(xs: np.ndarray, i: int, nbrs: Sequence[int], noise: np.ndarray) -> None:
    """Rotate column ``i`` of every matrix in the stack ``xs`` (B, n, p) in place."""
    b, n, _ = xs.shape
    design = np.empty((b, n, len(nbrs) + 1))
    design[:, :, 0] = 1.0
    if nbrs:
        design[:, :, 1:] = xs[:, :, list(nbrs)]
    q = np.linalg.qr(design)[0]
    col = xs[:, :, i]
    fitted = np.einsum("bnk,bk->bn", q, np.einsum("bnk,bn->bk", q, col))
    resid = col - fitted
    new_resid = noise - np.einsum("bnk,bk->bn", q, np.einsum("bnk,bn->bk", q, noise))
    r_norm = np.linalg.norm(resid, axis=1)
    e_norm = np.linalg.norm(new_resid, axis=1)
    ok = (r_norm >= DEGENERATE_TOL * np.linalg.norm(col, axis=1)) & (
        e_norm >= DEGENERATE_TOL * np.linalg.norm(noise, axis=1)
    )
    scale = np.divide(r_norm, e_norm, out=np.zeros_like(r_norm), where=ok)
    xs[:, :, i] = np.where(ok[:, None], fitted + new_resid * scale[:, None], col)


def residual_rotation(x, i: int, neighbors: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """One residual-rotation draw for column ``i``; returns the new column."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not n > len(neighbors) + 1:
        raise SamplerPreconditionError(f"need n > |N_i| + 1, got n={n}, |N_i|={len(neighbors)}")
    stack = x[None].copy()
    _rotate(stack, int(i), list(neighbors), rng.standard_normal((1, n)))
    return stack[0, :, i]


def _run_chain(xs: np.ndarray, g: Graph, sweep: Sequence[int], noise: np.ndarray) -> None:
    """Apply rotations along ``sweep``; ``noise`` is (B, len(sweep), n)."""
    for step, i in enumerate(sweep):
        _rotate(xs, i, g.neighbors[i], noise[:, step, :])


def exchangeable_copies(
    x, g: Graph, cfg: SamplerConfig, return_hub: bool = False
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Generate ``cfg.num_copies`` exchangeable copies of ``x``.

    Returns an array of shape ``(M, n, p)`` (and the hub matrix when
    ``return_hub`` is set).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != g.p:
        raise ValueError(f"data must be n x {g.p}, got shape {x.shape}")
    n = x.shape[0]
    order = cfg.resolve_order(g.p)
    check_sample_size(n, g, order)

    forward = list(order) * cfg.iterations
    backward = list(reversed(order)) * cfg.iterations
    hub = x[None].copy()
    fwd_noise = derive_rng(cfg.seed, FORWARD_STREAM).standard_normal((1, len(forward), n))
    _run_chain(hub, g, forward, fwd_noise)

    m = cfg.num_copies
    noise = np.stack(
        [
            derive_rng(cfg.seed, CHAIN_STREAM, k).standard_normal((len(backward), n))
            for k in range(m)
        ]
    )
    copies = np.repeat(hub, m, axis=0)
    _run_chain(copies, g, backward, noise)
    if return_hub:
        return copies, hub[0]
    return copies
