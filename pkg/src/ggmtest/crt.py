"""Graphical conditional randomization test of ``Y _||_ X_T | X_{-T}``.

The covariates are assumed to follow a Gaussian graphical model on a known
graph (any super-graph of the true one will do).  Copies are drawn by
resampling only the columns in ``T``, so ``X_{-T}`` and ``y`` are shared by
every copy and a statistic of ``(y, X)`` is compared across copies.

Statistics follow the convention larger = more evidence of dependence, so
residual sums of squares and deviances enter with a minus sign.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .graph import Graph
from .pvalue import PvalueMode, compute_pvalue
from .regress import is_binary, lasso_cv, logistic_irls, ols_with_tstats
from .result import TestResult
from .sampler import PVALUE_STREAM, SamplerConfig, derive_rng, exchangeable_copies
from .special import f_sf

__all__ = [
    "CrtKind",
    "CrtStatistic",
    "CrtProblem",
    "Distillation",
    "distill",
    "run_crt",
    "run_crt_multi",
    "run_crt_per_variable",
    "statistic_lm_sst",
    "statistic_lm_ssr",
    "statistic_glm_dev",
    "statistic_distilled",
    "bonferroni_combine",
    "f_test_baseline",
]

# substreams under the sampler seed, next to the sampler's own
DISTILL_STREAM = 3
PER_VARIABLE_STREAM = 4


class CrtKind(str, Enum):
    LM_SST = "LM_SST"
    LM_SSR = "LM_SSR"
    GLM_DEV = "GLM_DEV"
    GLM_L1_D = "GLM_L1_D"
    GLM_L1_R_SST = "GLM_L1_R_SST"
    LM_L1_R_SSR = "LM_L1_R_SSR"
    CUSTOM = "CUSTOM"


DISTILLED = (CrtKind.GLM_L1_D, CrtKind.GLM_L1_R_SST, CrtKind.LM_L1_R_SSR)


@dataclass(frozen=True)
class CrtStatistic:
    """Statistic choice.  ``CUSTOM`` wraps ``func(y, x) -> float``.

    The distilled kinds fit a cross-validated lasso of ``y`` on ``X_{-T}``
    once per test (logistic when ``y`` is binary, else Gaussian) with
    ``cv_folds`` folds.
    """

    kind: CrtKind = CrtKind.LM_SST
    func: Callable[[np.ndarray, np.ndarray], float] | None = None
    cv_folds: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CrtKind(self.kind))
        if self.kind is CrtKind.CUSTOM and self.func is None:
            raise ValueError("a CUSTOM statistic needs func")
        if self.kind is not CrtKind.CUSTOM and self.func is not None:
            raise ValueError("func is only used by CUSTOM statistics")

    @property
    def name(self) -> str:
        if self.kind is CrtKind.CUSTOM:
            return getattr(self.func, "__name__", "CUSTOM")
        return self.kind.value


def _target(t: Sequence[int], p: int) -> tuple[int, ...]:
    t = tuple(sorted({int(i) for i in t}))
    if not t:
        raise ValueError("target set must be non-empty")
    if t[0] < 0 or t[-1] >= p:
        raise ValueError(f"target ids must lie in [0, {p})")
    return t


@dataclass(frozen=True)
class CrtProblem:
    """Inputs of one test.  ``target`` holds 0-based column ids."""

    y: np.ndarray
    x: np.ndarray
    target: tuple[int, ...]
    graph: Graph
    statistic: CrtStatistic = CrtStatistic()
    sampler: SamplerConfig = SamplerConfig()
    pvalue_mode: PvalueMode = PvalueMode.CONSERVATIVE

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.graph.p:
            raise ValueError(f"covariates must be n x {self.graph.p}")
        if y.size != x.shape[0]:
            raise ValueError("response length differs from the number of rows")
        t = _target(self.target, self.graph.p)
        if self.statistic.kind is CrtKind.GLM_DEV and not is_binary(y):
            raise ValueError("GLM_DEV needs a binary 0/1 response")
        order = self.sampler.order
        if order is None:
            object.__setattr__(self, "sampler", replace(self.sampler, order=t))
        elif set(order) != set(t):
            raise ValueError("sampler order must be a permutation of the target set")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "pvalue_mode", PvalueMode.parse(self.pvalue_mode))


# ---------------------------------------------------------------------------
# statistics


def statistic_lm_sst(y, x, target) -> float:
    """Sum of squared t-statistics of the ``X_T`` coefficients in the full OLS fit."""
    fit = ols_with_tstats(y, x)
    return float(np.sum(fit.t_statistics[list(target)] ** 2))


def statistic_lm_ssr(y, x, target=None) -> float:
    """Minus the residual sum of squares of the full OLS fit."""
    return -float(ols_with_tstats(y, x).rss)


def statistic_glm_dev(y, x, target=None) -> float:
    """Minus the deviance of the full logistic fit."""
    return -float(logistic_irls(y, x).deviance)


@dataclass(frozen=True)
class Distillation:
    """Fitted values of ``y`` on ``X_{-T}``: ``fitted`` on the response scale,
    ``link`` on the linear-predictor scale."""

    family: str
    fitted: np.ndarray
    link: np.ndarray
    lam: float | None = None
    flags: tuple[str, ...] = ()


def distill(y, x, target, folds: int = 10, seed: int = 0) -> Distillation:
    """Cross-validated lasso of ``y`` on the columns outside ``target``."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    family = "logistic" if is_binary(y) else "gaussian"
    rest = [j for j in range(x.shape[1]) if j not in set(target)]
    if not rest:
        mean = float(np.mean(y))
        if family == "gaussian":
            const = np.full(y.size, mean)
            return Distillation(family, const, const)
        mean = min(max(mean, 1e-12), 1 - 1e-12)
        return Distillation(family, np.full(y.size, mean), np.full(y.size, np.log(mean / (1 - mean))))
    lam, fit = lasso_cv(y, x[:, rest], family=family, folds=folds, seed=seed)
    return Distillation(family, fit.fitted_values, fit.linear_predictor, lam, fit.flags)


def statistic_distilled(y, x, target, variant: CrtKind | str, cache: Distillation | None = None,
                        folds: int = 10, seed: int = 0) -> float:
    """Statistics built on a distilled fit of ``y`` on ``X_{-T}``.

    ``GLM_L1_D``: minus the deviance of a GLM of ``y`` on ``[fit, X_T]`` (the
    fit on the link scale; the deviance is the RSS for a Gaussian response).
    ``GLM_L1_R_SST``: sum of squared t-statistics of the OLS of ``y - fit``
    on ``X_T``.  ``LM_L1_R_SSR``: minus the RSS of that OLS.
    """
    variant = CrtKind(variant)
    if variant not in DISTILLED:
        raise ValueError(f"{variant.value} is not a distilled statistic")
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if cache is None:
        cache = distill(y, x, target, folds, seed)
    xt = x[:, list(target)]
    if variant is CrtKind.GLM_L1_D:
        design = np.column_stack([cache.link, xt])
        if cache.family == "logistic":
            return -float(logistic_irls(y, design).deviance)
        return -float(ols_with_tstats(y, design).rss)
    fit = ols_with_tstats(y - cache.fitted, xt)
    if variant is CrtKind.GLM_L1_R_SST:
        return float(np.sum(fit.t_statistics**2))
    return -float(fit.rss)


def _evaluator(stat: CrtStatistic, y, x, target, seed: int,
               cache: dict | None = None) -> tuple[Callable[[np.ndarray], float], list[str]]:
    k = stat.kind
    if k is CrtKind.CUSTOM:
        return (lambda m: float(stat.func(y, m))), []
    if k is CrtKind.LM_SST:
        return (lambda m: statistic_lm_sst(y, m, target)), []
    if k is CrtKind.LM_SSR:
        return (lambda m: statistic_lm_ssr(y, m)), []
    if k is CrtKind.GLM_DEV:
        return (lambda m: statistic_glm_dev(y, m)), []
    cache = {} if cache is None else cache
    if stat.cv_folds not in cache:
        cv_seed = int(derive_rng(seed, DISTILL_STREAM).integers(2**31))
        cache[stat.cv_folds] = distill(y, x, target, stat.cv_folds, cv_seed)
    dist = cache[stat.cv_folds]
    return (lambda m: statistic_distilled(y, m, target, k, dist)), list(dist.flags)


def _evaluate_all(y, stack, target, statistics: Mapping[str, CrtStatistic], seed: int):
    # the distilled fit depends on (y, X_{-T}) only, so all copies and all
    # distilled statistics share it
    cache: dict = {}
    out = {}
    for key, stat in statistics.items():
        f, warnings = _evaluator(stat, y, stack[0], target, seed, cache)
        out[key] = (stat.name, np.array([f(m) for m in stack]), warnings)
    return out


def _assemble(name, values, mode, cfg, warnings, extra=None) -> TestResult:
    p = compute_pvalue(values[0], values[1:], mode, derive_rng(cfg.seed, PVALUE_STREAM))
    if not np.all(np.isfinite(values)):
        warnings = warnings + ["non-finite statistic values"]
    return TestResult(name, float(values[0]), values[1:], p, mode.value, cfg.seed, cfg.iterations,
                      warnings, extra or {})


def run_crt(problem: CrtProblem) -> TestResult:
    """Monte Carlo p-value for ``Y _||_ X_T | X_{-T}``."""
    return run_crt_multi(problem.y, problem.x, problem.target, problem.graph,
                         {"_": problem.statistic}, problem.sampler, problem.pvalue_mode)["_"]


def run_crt_multi(y, x, target, g: Graph, statistics: Mapping[str, CrtStatistic] | Sequence[CrtStatistic],
                  sampler: SamplerConfig, mode: PvalueMode | str = PvalueMode.CONSERVATIVE) -> dict[str, TestResult]:
    """Several statistics evaluated on one shared set of copies."""
    if not isinstance(statistics, Mapping):
        statistics = {s.name: s for s in statistics}
    mode = PvalueMode.parse(mode)
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    target = _target(target, g.p)
    if sampler.order is None:
        sampler = replace(sampler, order=target)
    for stat in statistics.values():
        CrtProblem(y, x, target, g, stat, sampler, mode)  # validation only
    stack = np.concatenate([x[None], exchangeable_copies(x, g, sampler)])
    evaluated = _evaluate_all(y, stack, target, statistics, sampler.seed)
    return {key: _assemble(name, vals, mode, sampler, warns) for key, (name, vals, warns) in evaluated.items()}


def bonferroni_combine(pvals) -> float:
    """``min(1, |T| min_i p_i)`` over the per-variable p-values."""
    pv = np.asarray(pvals, dtype=float).ravel()
    if pv.size == 0:
        raise ValueError("need at least one p-value")
    if np.any((pv <= 0) | (pv > 1)):
        raise ValueError("p-values must lie in (0, 1]")
    return float(min(1.0, pv.size * pv.min()))


def _variable_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(PER_VARIABLE_STREAM, int(i))).generate_state(1)[0])


def run_crt_per_variable(problem: CrtProblem) -> TestResult:
    """Bonferroni combination of one single-variable test per ``i`` in ``T``.

    Variable ``i`` is tested on its own (``T = {i}``, resampling column ``i``
    only) with a sampler seed derived from the problem seed and ``i``.
    """
    per = {}
    for i in problem.target:
        cfg = replace(problem.sampler, order=(i,), seed=_variable_seed(problem.sampler.seed, i))
        sub = CrtProblem(problem.y, problem.x, (i,), problem.graph, problem.statistic, cfg, problem.pvalue_mode)
        per[i] = run_crt(sub)
    pvals = [r.pvalue for r in per.values()]
    combined = bonferroni_combine(pvals)
    observed = min(pvals)
    warnings = sorted({w for r in per.values() for w in r.warnings})
    return TestResult(
        statistic=f"{problem.statistic.name}_BONF",
        observed=observed,
        copies=np.array([]),
        pvalue=combined,
        mode=problem.pvalue_mode.value,
        seed=problem.sampler.seed,
        iterations=problem.sampler.iterations,
        warnings=warnings,
        extra={"per_variable": {int(i): r.pvalue for i, r in per.items()}},
    )


def f_test_baseline(y, x, target) -> float:
    """Classical F-test p-value for ``beta_T = 0`` in the OLS of ``y`` on ``[1, X]``."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    if not n > p + 1:
        raise ValueError(f"need n > p + 1, got n={n}, p={p}")
    target = _target(target, p)
    rest = [j for j in range(p) if j not in set(target)]
    full = ols_with_tstats(y, x)
    if "rank_deficient" in full.flags:
        raise ValueError("design is rank deficient")
    reduced_rss = ols_with_tstats(y, x[:, rest]).rss if rest else float(np.sum((y - y.mean()) ** 2))
    d1, d2 = len(target), n - p - 1
    if full.rss <= 0:
        return 0.0 if reduced_rss > 0 else 1.0
    f = ((reduced_rss - full.rss) / d1) / (full.rss / d2)
    return float(f_sf(max(f, 0.0), d1, d2))
