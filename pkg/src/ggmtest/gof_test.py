"""Monte Carlo goodness-of-fit test for a Gaussian graphical model.

Generate exchangeable copies of the data under the hypothesised graph,
evaluate one statistic on the data and on every copy, and rank.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .gof_stats import GofStatistic
from .graph import Graph
from .pvalue import PvalueMode, compute_pvalue
from .result import TestResult
from .sampler import PVALUE_STREAM, SamplerConfig, derive_rng, exchangeable_copies

__all__ = ["GofTestSpec", "run_gof", "run_local_gof", "run_gof_multi", "evaluate_statistic"]

Statistic = GofStatistic | Callable[[np.ndarray], float]


@dataclass(frozen=True)
class GofTestSpec:
    """Hypothesised graph, statistic and sampler settings.

    ``statistic`` is a :class:`GofStatistic` or any function of a data matrix
    returning a real number.  With ``local_set`` only those columns are
    resampled, which tests the local hypothesis
    ``X_i _||_ X_{B_i} | X_{N_i}`` for ``i`` in the set.
    """

    graph: Graph
    statistic: Statistic = GofStatistic()
    sampler: SamplerConfig = SamplerConfig()
    pvalue_mode: PvalueMode = PvalueMode.CONSERVATIVE
    local_set: tuple[int, ...] | None = None
    keep_copies: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "pvalue_mode", PvalueMode.parse(self.pvalue_mode))
        p = self.graph.p
        if self.local_set is not None:
            local = tuple(int(i) for i in self.local_set)
            if not local:
                raise ValueError("local set must be non-empty")
            if any(not 0 <= i < p for i in local) or len(set(local)) != len(local):
                raise ValueError("local set must hold distinct node ids in [0, p)")
            object.__setattr__(self, "local_set", local)
            order = self.sampler.order
            if order is None:
                object.__setattr__(self, "sampler", replace(self.sampler, order=tuple(sorted(local))))
            elif set(order) != set(local):
                raise ValueError("sampler order must be a permutation of the local set")
        else:
            order = self.sampler.resolve_order(p)
            if sorted(order) != list(range(p)):
                raise ValueError("sampler order must be a permutation of all nodes")

    @property
    def statistic_name(self) -> str:
        return _name(self.statistic)


def _name(stat: Statistic) -> str:
    if isinstance(stat, GofStatistic):
        return stat.name
    return getattr(stat, "__name__", type(stat).__name__)


def evaluate_statistic(stat: Statistic, stack: np.ndarray, g: Graph) -> np.ndarray:
    """Statistic values on every matrix of a ``(B, n, p)`` stack."""
    if isinstance(stat, GofStatistic):
        return np.asarray(stat(stack, g), dtype=float)
    return np.array([float(stat(m)) for m in stack])


def _result(name, values, spec_mode, cfg, warnings, copies_data) -> TestResult:
    rng = derive_rng(cfg.seed, PVALUE_STREAM)
    p = compute_pvalue(values[0], values[1:], spec_mode, rng)
    return TestResult(
        statistic=name,
        observed=float(values[0]),
        copies=values[1:],
        pvalue=p,
        mode=spec_mode.value,
        seed=cfg.seed,
        iterations=cfg.iterations,
        warnings=warnings,
        copy_data=copies_data,
    )


def run_gof(x, spec: GofTestSpec) -> TestResult:
    """Goodness-of-fit p-value of ``x`` against the model of ``spec.graph``.

    Raises :class:`~ggmtest.sampler.SamplerPreconditionError` when
    ``n <= 1 + max degree`` over the resampled nodes.
    """
    x = np.asarray(x, dtype=float)
    g = spec.graph
    copies = exchangeable_copies(x, g, spec.sampler)
    stack = np.concatenate([x[None], copies])
    values = evaluate_statistic(spec.statistic, stack, g)
    warnings = spec.statistic.diagnostics(x, g) if isinstance(spec.statistic, GofStatistic) else []
    if not np.all(np.isfinite(values)):
        warnings.append("non-finite statistic values")
    return _result(
        spec.statistic_name,
        values,
        spec.pvalue_mode,
        spec.sampler,
        warnings,
        copies if spec.keep_copies else None,
    )


def run_local_gof(x, spec: GofTestSpec) -> TestResult:
    """Local test: only the columns in ``spec.local_set`` are resampled."""
    if spec.local_set is None:
        raise ValueError("a local test needs spec.local_set")
    return run_gof(x, spec)


def run_gof_multi(
    x,
    g: Graph,
    statistics: Mapping[str, Statistic] | Sequence[Statistic],
    sampler: SamplerConfig,
    mode: PvalueMode | str = PvalueMode.CONSERVATIVE,
) -> dict[str, TestResult]:
    """Several statistics evaluated on one shared set of copies.

    Each result equals what :func:`run_gof` returns for that statistic alone
    with the same sampler settings.
    """
    if not isinstance(statistics, Mapping):
        statistics = {_name(s): s for s in statistics}
    mode = PvalueMode.parse(mode)
    x = np.asarray(x, dtype=float)
    stack = np.concatenate([x[None], exchangeable_copies(x, g, sampler)])
    out = {}
    for key, stat in statistics.items():
        values = evaluate_statistic(stat, stack, g)
        warnings = stat.diagnostics(x, g) if isinstance(stat, GofStatistic) else []
        out[key] = _result(_name(stat), values, mode, sampler, warnings, None)
    return out
