"""Simulation scenarios and a Monte Carlo size/power harness.

Goodness-of-fit families draw data from a band, hub or Erdos-Renyi model and
test a (possibly wrong) null graph.  Conditional randomization families use
covariates from a randomly relabelled band model and a response depending on
them through a linear, logistic, nonlinear or step-function model; the first
8 columns form the target set.
"""

from __future__ import annotations

import configparser
import json
import time
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import baselines, crt, gof_stats, gof_test, graph, ggm
from .graph import Graph
from .pvalue import PvalueMode
from .sampler import SamplerConfig, derive_rng
from .special import normal_inv_cdf

__all__ = [
    "ScenarioConfig",
    "PowerReport",
    "ConfigError",
    "GOF_FAMILIES",
    "CRT_FAMILIES",
    "crt_covariates",
    "gen_linear_scenario",
    "gen_logistic_scenario",
    "nonlinear_basis",
    "gen_nonlinear_scenario",
    "step_transform",
    "gen_step_binary_scenario",
    "gen_gof_scenario",
    "distance_weights",
    "run_power_study",
    "load_config",
]

GOF_FAMILIES = ("gof_band", "gof_hub", "gof_er")
CRT_FAMILIES = ("crt_linear", "crt_logistic", "crt_nonlinear", "crt_nonlinear_binary")
TARGET_SIZE = 8
HUB_GROUP = 10
HUB_DELETE_PROB = 0.7

GOF_METHODS = ("PRC", "ERC", "PRC_W", "ERC_W", "F_SUM", "F_MAX", "GLR_L1", "M1P1", "BONF")
CRT_METHODS = tuple(k.value for k in crt.CrtKind if k is not crt.CrtKind.CUSTOM)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting.  Unused knobs are ignored by a family."""

    family: str
    p: int = 20
    n: int = 40
    M: int = 100
    L: int = 3
    s: float = 0.2
    K: int = 6
    K0: int = 6
    xi: float = 0.9
    q: float = 0.4
    q0: float = 0.08
    theta: float = 0.0
    R: int = 100
    alpha: float = 0.05
    seed: int = 0
    name: str = ""

    def __post_init__(self) -> None:
        problems = []
        if self.family not in GOF_FAMILIES + CRT_FAMILIES:
            problems.append(f"unknown family {self.family!r}")
        for key in ("p", "n", "M", "L", "R"):
            if int(getattr(self, key)) < 1:
                problems.append(f"{key} must be a positive integer")
        if not 0 < self.alpha < 1:
            problems.append("alpha must lie in (0, 1)")
        if self.family in CRT_FAMILIES and self.p < 20:
            problems.append("regression scenarios need p >= 20")
        if self.family == "gof_band" and not (1 <= self.K < self.p and 0 <= self.K0 < self.p):
            problems.append("band widths must satisfy 1 <= K < p and 0 <= K0 < p")
        if self.family == "gof_hub" and self.p % HUB_GROUP:
            problems.append(f"hub scenarios need p divisible by {HUB_GROUP}")
        if self.family == "gof_er" and not 0 < self.q0 <= self.q < 1:
            problems.append("need 0 < q0 <= q < 1")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def is_gof(self) -> bool:
        return self.family in GOF_FAMILIES


# ---------------------------------------------------------------------------
# regression scenarios


def crt_covariates(p: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, Graph]:
    """Band model (K = 6, s = 0.2) with a fresh random node relabelling,
    rescaled to unit variances."""
    g, omega = graph.band_graph_precision(p, 6, 0.2)
    g, omega = graph.permute_nodes(g, rng.permutation(p), omega)
    omega = ggm.standardize_to_unit_variances(omega)
    return ggm.mvn_sample(n, np.zeros(p), omega, rng), g


def _linear_beta(p: int, theta: float, rng: np.random.Generator) -> np.ndarray:
    beta = np.zeros(p)
    beta[:20] = rng.uniform(1 / np.sqrt(20), 2 / np.sqrt(20), size=20)
    beta[:TARGET_SIZE] *= theta
    return beta


def _target() -> tuple[int, ...]:
    return tuple(range(TARGET_SIZE))


def gen_linear_scenario(p: int, n: int, theta: float, rng: np.random.Generator):
    """``y = X beta + eps``; returns ``(x, y, target, graph)``."""
    x, g = crt_covariates(p, n, rng)
    beta = _linear_beta(p, theta, rng)
    y = x @ beta + rng.standard_normal(n)
    return x, y, _target(), g


def _sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


def gen_logistic_scenario(p: int, n: int, theta: float, rng: np.random.Generator):
    """Same coefficients as the linear scenario; ``y ~ Bernoulli(sigmoid(X beta))``."""
    x, g = crt_covariates(p, n, rng)
    beta = _linear_beta(p, theta, rng)
    y = (rng.random(n) < _sigmoid(x @ beta)).astype(float)
    return x, y, _target(), g


def nonlinear_basis(x) -> np.ndarray:
    """Fourteen nonlinear features of the first 20 coordinates.

    Accepts one vector or an ``(n, p)`` matrix (features per row).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 20:
        raise ValueError("need at least 20 coordinates")

    def block(z):
        return [
            z[..., 0] ** 2 / 2,
            1 / (1 + z[..., 1] ** 2),
            np.cos(np.pi * z[..., 2]),
            np.sin(np.pi * z[..., 3]),
            z[..., 4] * z[..., 5],
            np.sin(z[..., 6] * z[..., 7]),
            np.sin(np.pi * z[..., 8]) / (4 + z[..., 9] ** 2),
        ]

    return np.stack(block(x[..., :10]) + block(x[..., 10:20]), axis=-1)


def gen_nonlinear_scenario(p: int, n: int, theta: float, rng: np.random.Generator):
    """``y = B(X) beta + eps`` with ``beta = (theta x 7, 1 x 7)``."""
    x, g = crt_covariates(p, n, rng)
    beta = np.r_[np.full(7, float(theta)), np.ones(7)]
    y = nonlinear_basis(x) @ beta + rng.standard_normal(n)
    return x, y, _target(), g


_STEP_L = normal_inv_cdf(1 / 3)
_STEP_U = normal_inv_cdf(2 / 3)


def step_transform(x):
    """``1/4`` outside the middle normal tercile, ``-1/2`` inside."""
    x = np.asarray(x, dtype=float)
    out = (
        (x < _STEP_L).astype(float)
        - 2.0 * ((x >= _STEP_L) & (x <= _STEP_U))
        + (x > _STEP_U).astype(float)
    ) / 4
    return float(out) if out.ndim == 0 else out


def gen_step_binary_scenario(p: int, n: int, theta: float, rng: np.random.Generator):
    """``y ~ Bernoulli(sigmoid(b(X_[20]) beta))`` with ``beta = (theta x 10, 1 x 10)``."""
    x, g = crt_covariates(p, n, rng)
    beta = np.r_[np.full(10, float(theta)), np.ones(10)]
    y = (rng.random(n) < _sigmoid(step_transform(x[:, :20]) @ beta)).astype(float)
    return x, y, _target(), g


CRT_GENERATORS = {
    "crt_linear": gen_linear_scenario,
    "crt_logistic": gen_logistic_scenario,
    "crt_nonlinear": gen_nonlinear_scenario,
    "crt_nonlinear_binary": gen_step_binary_scenario,
}


# ---------------------------------------------------------------------------
# goodness-of-fit scenarios


def gen_gof_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> tuple[np.ndarray, Graph]:
    """Data from the true model and the null graph to be tested.

    Hub and Erdos-Renyi null graphs (and the Erdos-Renyi truth) are redrawn
    on every call.
    """
    if cfg.family == "gof_band":
        _, omega = graph.band_graph_precision(cfg.p, cfg.K, cfg.s)
        null = graph.band_graph(cfg.p, cfg.K0) if cfg.K0 else graph.empty_graph(cfg.p)
    elif cfg.family == "gof_hub":
        truth, omega = graph.hub_graph_precision(cfg.p, HUB_GROUP, cfg.xi)
        null = graph.delete_edges_randomly(truth, HUB_DELETE_PROB, rng)
    elif cfg.family == "gof_er":
        truth, omega = graph.erdos_renyi_precision(cfg.p, cfg.q, cfg.s, rng, unit_diagonal=False)
        null = graph.er_null_graph(truth, cfg.q, cfg.q0, rng)
    else:
        raise ValueError(f"{cfg.family} is not a goodness-of-fit family")
    return ggm.mvn_sample(cfg.n, np.zeros(cfg.p), omega, rng), null


def distance_weights(p: int, near: int = 6, w_near: float = 0.8, w_far: float = 0.2) -> np.ndarray:
    """Pair weights favouring index distance ``1..near`` (zero diagonal)."""
    d = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    w = np.where(d <= near, w_near, w_far)
    np.fill_diagonal(w, 0.0)
    return w


# ---------------------------------------------------------------------------
# harness


@dataclass
class PowerReport:
    """Rejection proportion and binomial standard error per method.

    Failed replications are excluded from a method's denominator and counted
    in ``failures``.
    """

    config: ScenarioConfig
    rates: dict[str, float]
    se: dict[str, float]
    completed: dict[str, int]
    failures: dict[str, int]
    runtime: float
    errors: dict[str, list[str]] = field(default_factory=dict)

    def records(self) -> list[dict]:
        cfg = asdict(self.config)
        return [
            {
                "scenario": self.config.name or self.config.family,
                "method": m,
                "proportion": self.rates[m],
                "se": self.se[m],
                "R": self.config.R,
                "completed": self.completed[m],
                "failures": self.failures[m],
                "runtime": self.runtime,
                "config": cfg,
            }
            for m in self.rates
        ]

    def table(self) -> str:
        name = self.config.name or self.config.family
        lines = [f"{name}: R={self.config.R} alpha={self.config.alpha} ({self.runtime:.1f}s)"]
        for m in self.rates:
            extra = f"  failures={self.failures[m]}" if self.failures[m] else ""
            lines.append(f"  {m:<16} {self.rates[m]:.3f} ({self.se[m]:.3f}){extra}")
        return "\n".join(lines)


def _gof_statistic(method: str, p: int) -> gof_stats.GofStatistic:
    if method in ("PRC_W", "ERC_W"):
        return gof_stats.GofStatistic(method, weights=distance_weights(p))
    return gof_stats.GofStatistic(method)


def _check_methods(cfg: ScenarioConfig, methods: Sequence[str]) -> list[str]:
    methods = [m.upper() for m in methods]
    if cfg.is_gof:
        allowed = set(GOF_METHODS)
    else:
        allowed = set(CRT_METHODS) | {m + "_BONF" for m in CRT_METHODS} | {"F_TEST"}
    bad = [m for m in methods if m not in allowed]
    if bad:
        raise ConfigError(f"methods {bad} do not apply to {cfg.family}; choose from {sorted(allowed)}")
    if not methods:
        raise ConfigError("no methods given")
    return methods


def _replicate_gof(cfg: ScenarioConfig, methods, r: int) -> dict[str, object]:
    rng = derive_rng(cfg.seed, 100, r)
    seed = int(derive_rng(cfg.seed, 101, r).integers(2**31))
    x, null = gen_gof_scenario(cfg, rng)
    out: dict[str, object] = {}
    stats = {m: _gof_statistic(m, cfg.p) for m in methods if m not in ("M1P1", "BONF")}
    if stats:
        try:
            res = gof_test.run_gof_multi(x, null, stats, SamplerConfig(cfg.M, cfg.L, seed=seed))
            out.update({m: res[m].pvalue <= cfg.alpha for m in stats})
        except Exception as exc:  # a failed replication is counted, not fatal
            out.update({m: exc for m in stats})
    for m, fn in (("M1P1", baselines.m1p1_gof), ("BONF", baselines.bonf_gof)):
        if m in methods:
            try:
                out[m] = fn(x, null, cfg.alpha).reject
            except Exception as exc:
                out[m] = exc
    return out


def _replicate_crt(cfg: ScenarioConfig, methods, r: int) -> dict[str, object]:
    rng = derive_rng(cfg.seed, 100, r)
    seed = int(derive_rng(cfg.seed, 101, r).integers(2**31))
    x, y, target, g = CRT_GENERATORS[cfg.family](cfg.p, cfg.n, cfg.theta, rng)
    sampler = SamplerConfig(cfg.M, cfg.L, seed=seed)
    out: dict[str, object] = {}
    joint = {m: crt.CrtStatistic(m) for m in methods if m in CRT_METHODS}
    if joint:
        try:
            res = crt.run_crt_multi(y, x, target, g, joint, sampler)
            out.update({m: res[m].pvalue <= cfg.alpha for m in joint})
        except Exception as exc:
            out.update({m: exc for m in joint})
    for m in methods:
        try:
            if m.endswith("_BONF"):
                prob = crt.CrtProblem(y, x, target, g, crt.CrtStatistic(m[: -len("_BONF")]), sampler)
                out[m] = crt.run_crt_per_variable(prob).pvalue <= cfg.alpha
            elif m == "F_TEST":
                out[m] = crt.f_test_baseline(y, x, target) <= cfg.alpha
        except Exception as exc:
            out[m] = exc
    return out


def run_power_study(cfg: ScenarioConfig, methods: Sequence[str], n_jobs: int = 1) -> PowerReport:
    """Estimate rejection rates over ``cfg.R`` independent replications.

    Replication ``r`` draws its data and sampler seed from substreams of
    ``cfg.seed`` indexed by ``r``, so results do not depend on ``n_jobs``.
    Within a replication all statistics share one set of copies.
    """
    methods = _check_methods(cfg, methods)
    rep = _replicate_gof if cfg.is_gof else _replicate_crt
    start = time.perf_counter()
    if n_jobs == 1:
        outcomes = [rep(cfg, methods, r) for r in range(cfg.R)]
    else:
        outcomes = Parallel(n_jobs=n_jobs)(delayed(rep)(cfg, methods, r) for r in range(cfg.R))
    runtime = time.perf_counter() - start
    rates, se, done, fails, errors = {}, {}, {}, {}, {}
    for m in methods:
        ok = [o[m] for o in outcomes if isinstance(o[m], (bool, np.bool_))]
        bad = [o[m] for o in outcomes if isinstance(o[m], Exception)]
        k = len(ok)
        rate = float(np.mean(ok)) if k else float("nan")
        rates[m] = rate
        se[m] = float(np.sqrt(rate * (1 - rate) / k)) if k else float("nan")
        done[m], fails[m] = k, len(bad)
        if bad:
            errors[m] = sorted({f"{type(e).__name__}: {e}" for e in bad})
    return PowerReport(cfg, rates, se, done, fails, runtime, errors)


# ---------------------------------------------------------------------------
# config files

_INT_KEYS = {"p", "n", "M", "L", "K", "K0", "R", "seed"}
_FLOAT_KEYS = {"s", "xi", "q", "q0", "theta", "alpha"}
_OTHER_KEYS = {"family", "methods", "n_jobs"}


def load_config(path: str | Path) -> list[tuple[ScenarioConfig, list[str], int]]:
    """Read scenarios from an INI-style file, one section per scenario.

    Each section needs ``family`` and ``methods`` (comma separated); other
    keys are :class:`ScenarioConfig` fields.  A ``[DEFAULT]`` section may
    hold shared values.  All invalid keys and values are reported together.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep case: M, L, K0
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    out, problems = [], []
    if not parser.sections():
        raise ConfigError(f"{path} defines no scenario sections")
    for sec in parser.sections():
        items = dict(parser.items(sec))
        unknown = sorted(set(items) - _INT_KEYS - _FLOAT_KEYS - _OTHER_KEYS)
        if unknown:
            problems.append(f"[{sec}] unknown keys: {', '.join(unknown)}")
        for req in ("family", "methods"):
            if req not in items:
                problems.append(f"[{sec}] missing key: {req}")
        kw: dict[str, object] = {"name": sec}
        for key, raw in items.items():
            try:
                if key in _INT_KEYS:
                    kw[key] = int(raw)
                elif key in _FLOAT_KEYS:
                    kw[key] = float(raw)
                elif key == "family":
                    kw[key] = raw.strip()
            except ValueError:
                problems.append(f"[{sec}] {key}: cannot parse {raw!r}")
        methods = [m.strip() for m in items.get("methods", "").split(",") if m.strip()]
        try:
            n_jobs = int(items.get("n_jobs", 1))
        except ValueError:
            problems.append(f"[{sec}] n_jobs: cannot parse {items['n_jobs']!r}")
            n_jobs = 1
        if unknown or "family" not in items:
            continue
        try:
            cfg = ScenarioConfig(**kw)
            methods = _check_methods(cfg, methods)
        except (ConfigError, TypeError) as exc:
            problems.append(f"[{sec}] {exc}")
            continue
        out.append((cfg, methods, n_jobs))
    if problems:
        raise ConfigError("\n".join(problems))
    return out


def write_records(reports: Sequence[PowerReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            for rec in rep.records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
