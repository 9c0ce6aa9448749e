"""Regression fitters used by the conditional randomization statistics.

Conventions
-----------
* An intercept is always fitted and never penalised; ``coefficients`` holds
  the slopes only.
* Lasso losses are normalised per observation: ``(1/2n) ||y - eta||^2`` for
  the Gaussian family and ``(1/n)`` times the negative log-likelihood for the
  logistic family, plus ``lam * ||beta_std||_1``.
* Lasso predictors are standardised internally (mean 0, variance 1 with the
  ``1/n`` convention); the penalty applies to standardised coefficients and
  the returned coefficients are on the original scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import linalg as sla

from .linalg import least_squares, with_intercept

__all__ = [
    "FitSummary",
    "ols_with_tstats",
    "logistic_irls",
    "logistic_deviance",
    "lasso_cd",
    "lasso_path",
    "lasso_cv",
    "lambda_max",
    "is_binary",
]

ETA_CAP = 30.0
T_SENTINEL = 1e18


@dataclass(frozen=True)
class FitSummary:
    coefficients: np.ndarray
    intercept: float
    fitted_values: np.ndarray  # response scale (probabilities for logistic)
    linear_predictor: np.ndarray
    t_statistics: np.ndarray | None = None
    deviance: float | None = None
    rss: float | None = None
    df_resid: int | None = None
    lam: float | None = None
    lambda_path: np.ndarray | None = None
    n_iter: int = 0
    flags: tuple[str, ...] = field(default_factory=tuple)


def is_binary(y) -> bool:
    y = np.asarray(y)
    return bool(y.size) and bool(np.all((y == 0) | (y == 1)))


def _as_design(design, n: int) -> np.ndarray:
    if design is None:
        return np.empty((n, 0))
    d = np.asarray(design, dtype=float)
    if d.ndim == 1:
        d = d[:, None]
    if d.shape[0] != n:
        raise ValueError(f"design has {d.shape[0]} rows, response has {n}")
    return d


# ---------------------------------------------------------------------------
# ordinary least squares


def ols_with_tstats(y, design) -> FitSummary:
    """OLS on ``[1, design]`` with t-statistics for the slopes.

    Collinear columns (dropped by the pivoted QR) get coefficient 0 and
    t-statistic 0 with a ``rank_deficient`` flag.  A zero residual sum of
    squares makes every t-statistic infinite; nonzero slopes are then reported
    as ``+-1e18`` with a ``zero_residual`` flag.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    d = _as_design(design, n)
    k = d.shape[1]
    if not n > k + 1:
        raise ValueError(f"need n > k + 1, got n={n}, k={k}")
    fit = least_squares(y, d)
    flags = []
    if fit.rank < k + 1:
        flags.append("rank_deficient")
    df = n - fit.rank
    rss = float(fit.residual @ fit.residual)
    coef = fit.coef[1:]
    t = np.zeros(k)
    full = with_intercept(d, n)[:, fit.kept]
    r = np.linalg.qr(full, mode="r")
    rinv = sla.solve_triangular(r, np.eye(r.shape[0]))
    var_diag = np.sum(rinv**2, axis=1)  # diag of (X^T X)^{-1} over kept columns
    slope_pos = {c: pos for pos, c in enumerate(fit.kept) if c > 0}
    scale_tol = 1e-14 * max(float(y @ y), 1e-300)
    if rss <= scale_tol:
        flags.append("zero_residual")
        for c in slope_pos:
            t[c - 1] = np.sign(coef[c - 1]) * T_SENTINEL
    else:
        sigma2 = rss / df
        for c, pos in slope_pos.items():
            t[c - 1] = coef[c - 1] / np.sqrt(sigma2 * var_diag[pos])
    return FitSummary(
        coefficients=coef,
        intercept=float(fit.coef[0]),
        fitted_values=fit.fitted,
        linear_predictor=fit.fitted,
        t_statistics=t,
        deviance=rss,
        rss=rss,
        df_resid=df,
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# logistic regression by IRLS


def _sigmoid(eta):
    return 1.0 / (1.0 + np.exp(-eta))


def logistic_deviance(y, eta) -> float:
    """``-2 log L`` for binary ``y`` at linear predictor ``eta`` (capped)."""
    eta = np.clip(np.asarray(eta, dtype=float), -ETA_CAP, ETA_CAP)
    y = np.asarray(y, dtype=float)
    # log(1 + e^eta) - y eta, summed; logaddexp keeps it exact in both tails
    return float(2.0 * np.sum(np.logaddexp(0.0, eta) - y * eta))


def logistic_irls(y, design, max_iter: int = 25, tol: float = 1e-8) -> FitSummary:
    """Maximum-likelihood logistic regression on ``[1, design]``.

    Newton steps solved as weighted least squares, halved until the deviance
    does not increase.  The linear predictor is capped at ``|eta| <= 30`` so
    that separated data converge to a finite capped iterate.
    """
    y = np.asarray(y, dtype=float)
    if not is_binary(y):
        raise ValueError("logistic regression needs a 0/1 response")
    n = y.size
    d = with_intercept(_as_design(design, n), n)
    if not n > d.shape[1] - 1:
        raise ValueError("need n > k")
    beta = np.zeros(d.shape[1])
    ybar = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    beta[0] = np.log(ybar / (1 - ybar))
    eta = np.clip(d @ beta, -ETA_CAP, ETA_CAP)
    dev = logistic_deviance(y, eta)
    flags = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = _sigmoid(eta)
        w = np.maximum(mu * (1 - mu), 1e-12)
        sw = np.sqrt(w)
        z = (y - mu) / w
        step = np.linalg.lstsq(d * sw[:, None], z * sw, rcond=None)[0]
        t = 1.0
        for _ in range(30):
            cand = beta + t * step
            eta_c = np.clip(d @ cand, -ETA_CAP, ETA_CAP)
            dev_c = logistic_deviance(y, eta_c)
            if dev_c <= dev + 1e-12 * (1 + abs(dev)):
                break
            t *= 0.5
        else:
            cand, eta_c, dev_c = beta, eta, dev
        done = abs(dev - dev_c) / (abs(dev_c) + 0.1) < tol
        beta, eta, dev = cand, eta_c, dev_c
        if done:
            converged = True
            break
    if not converged:
        flags.append("not_converged")
    if np.any(np.abs(d @ beta) >= ETA_CAP):
        flags.append("eta_capped")
    return FitSummary(
        coefficients=beta[1:].copy(),
        intercept=float(beta[0]),
        fitted_values=_sigmoid(eta),
        linear_predictor=eta,
        deviance=dev,
        df_resid=n - d.shape[1],
        n_iter=it,
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# lasso by coordinate descent


@numba.njit(cache=True)
def _cd_gaussian(x, y, lam, beta, max_sweeps, tol):
    # x: standardized columns, y: centered response; objective (1/2n)|y - x b|^2 + lam |b|_1
    n, k = x.shape
    r = y.copy()
    for j in range(k):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= x[i, j] * beta[j]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        delta = 0.0
        for j in range(k):
            old = beta[j]
            g = 0.0
            for i in range(n):
                g += x[i, j] * r[i]
            z = g / n + old
            if z > lam:
                new = z - lam
            elif z < -lam:
                new = z + lam
            else:
                new = 0.0
            if new != old:
                diff = new - old
                beta[j] = new
                for i in range(n):
                    r[i] -= x[i, j] * diff
                if abs(diff) > delta:
                    delta = abs(diff)
        if delta < tol:
            return sweeps, True
    return sweeps, False


@numba.njit(cache=True)
def _cd_logistic(x, y, lam, b0, beta, max_outer, max_sweeps, tol):
    # proximal Newton: quadratic approximation of (1/n) NLL, weighted CD inner loop
    n, k = x.shape
    eta = np.empty(n)
    w = np.empty(n)
    r = np.empty(n)
    total = 0
    for outer in range(max_outer):
        for i in range(n):
            acc = b0
            for j in range(k):
                acc += x[i, j] * beta[j]
            if acc > 30.0:
                acc = 30.0
            elif acc < -30.0:
                acc = -30.0
            eta[i] = acc
            mu = 1.0 / (1.0 + np.exp(-acc))
            wi = mu * (1.0 - mu)
            if wi < 1e-5:
                wi = 1e-5
            w[i] = wi
            r[i] = (y[i] - mu) / wi  # working residual z - eta
        max_change = 0.0
        for sweep in range(max_sweeps):
            total += 1
            delta = 0.0
            # intercept
            num = 0.0
            den = 0.0
            for i in range(n):
                num += w[i] * r[i]
                den += w[i]
            d0 = num / den
            if d0 != 0.0:
                b0 += d0
                for i in range(n):
                    r[i] -= d0
                if abs(d0) > delta:
                    delta = abs(d0)
            for j in range(k):
                old = beta[j]
                g = 0.0
                h = 0.0
                for i in range(n):
                    g += w[i] * x[i, j] * r[i]
                    h += w[i] * x[i, j] * x[i, j]
                g /= n
                h /= n
                z = g + h * old
                if z > lam:
                    new = (z - lam) / h
                elif z < -lam:
                    new = (z + lam) / h
                else:
                    new = 0.0
                if new != old:
                    diff = new - old
                    beta[j] = new
                    for i in range(n):
                        r[i] -= x[i, j] * diff
                    step = abs(diff) * np.sqrt(h)
                    if step > delta:
                        delta = step
            if delta > max_change:
                max_change = delta
            if delta < tol:
                break
        if max_change < tol:
            return b0, total, True
    return b0, total, False


@dataclass
class _Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    active: np.ndarray  # columns with nonzero variance

    @classmethod
    def fit(cls, x: np.ndarray) -> "_Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        active = scale > 1e-12 * np.maximum(1.0, np.abs(mean))
        return cls(mean, np.where(active, scale, 1.0), active)

    def transform(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mean) / self.scale
        z[:, ~self.active] = 0.0
        return np.ascontiguousarray(z)


def lambda_max(y, design, family: str = "gaussian") -> float:
    """Smallest penalty with an all-zero solution (standardised scale)."""
    y = np.asarray(y, dtype=float)
    x = _as_design(design, y.size)
    z = _Standardizer.fit(x).transform(x)
    return float(np.max(np.abs(z.T @ (y - y.mean())), initial=0.0) / y.size)


def _check_family(family: str, y: np.ndarray) -> None:
    if family not in ("gaussian", "logistic"):
        raise ValueError(f"unknown family {family!r}")
    if family == "logistic" and not is_binary(y):
        raise ValueError("logistic family needs a 0/1 response")


def _path_fit(y, z, family, lambdas, tol, max_sweeps, truncate=False):
    """Warm-started path on standardised ``z``; returns (b0s, betas, ok).

    With ``truncate`` the path stops once the fraction of null deviance
    explained exceeds 0.999 or improves by less than 1e-5 between penalties;
    the remaining penalties reuse the last solution.
    """
    k = z.shape[1]
    beta = np.zeros(k)
    b0s = np.empty(len(lambdas))
    betas = np.empty((len(lambdas), k))
    ok = True
    yy = np.ascontiguousarray(y, dtype=float)
    ybar = y.mean()
    if family == "gaussian":
        yc = np.ascontiguousarray(y - ybar)
        null_dev = float(yc @ yc)
    else:
        pbar = np.clip(ybar, 1e-6, 1 - 1e-6)
        b0 = float(np.log(pbar / (1 - pbar)))
        null_dev = logistic_deviance(y, np.full(y.size, b0))
    prev_ratio = 0.0
    for a, lam in enumerate(lambdas):
        if family == "gaussian":
            _, conv = _cd_gaussian(z, yc, float(lam), beta, max_sweeps, tol)
            b0 = ybar
            resid = yc - z @ beta
            dev = float(resid @ resid)
        else:
            b0, _, conv = _cd_logistic(z, yy, float(lam), b0, beta, 100, max_sweeps, tol)
            dev = logistic_deviance(y, b0 + z @ beta)
        ok &= conv
        b0s[a] = b0
        betas[a] = beta
        if truncate and null_dev > 0:
            ratio = 1.0 - dev / null_dev
            if ratio > 0.999 or (a > 0 and ratio - prev_ratio < 1e-5 * ratio):
                b0s[a + 1:] = b0
                betas[a + 1:] = beta
                break
            prev_ratio = ratio
    return b0s, betas, ok


def _summary(y, x, std, family, b0, beta_std, lam, path=None, flags=()) -> FitSummary:
    coef = np.where(std.active, beta_std / std.scale, 0.0)
    intercept = float(b0 - coef @ std.mean)
    eta = intercept + x @ coef
    if family == "gaussian":
        fitted = eta
        resid = y - eta
        dev = float(resid @ resid)
    else:
        eta = np.clip(eta, -ETA_CAP, ETA_CAP)
        fitted = _sigmoid(eta)
        dev = logistic_deviance(y, eta)
    return FitSummary(
        coefficients=coef,
        intercept=intercept,
        fitted_values=fitted,
        linear_predictor=eta,
        deviance=dev,
        lam=float(lam),
        lambda_path=path,
        flags=tuple(flags),
    )


def lasso_path(y, design, lambdas, family: str = "gaussian", tol: float = 1e-9,
               max_sweeps: int = 1000) -> list[FitSummary]:
    y = np.asarray(y, dtype=float)
    _check_family(family, y)
    x = _as_design(design, y.size)
    std = _Standardizer.fit(x)
    z = std.transform(x)
    lambdas = np.asarray(lambdas, dtype=float)
    b0s, betas, ok = _path_fit(y, z, family, lambdas, tol, max_sweeps)
    flags = () if ok else ("not_converged",)
    return [_summary(y, x, std, family, b0s[a], betas[a], lambdas[a], lambdas, flags)
            for a in range(lambdas.size)]


def lasso_cd(y, design, lam: float, family: str = "gaussian", tol: float = 1e-9,
             max_sweeps: int = 1000) -> FitSummary:
    """Lasso at a single penalty (coordinate descent, cold start)."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x = _as_design(design, np.asarray(y).size)
    if x.shape[1] < 1:
        raise ValueError("lasso needs at least one predictor")
    return lasso_path(y, x, [lam], family, tol, max_sweeps)[0]


def _heldout_loss(y, eta, family) -> np.ndarray:
    # per-lambda mean loss; eta has shape (n_lambda, n_test)
    if family == "gaussian":
        return np.mean((y[None, :] - eta) ** 2, axis=1)
    eta = np.clip(eta, -ETA_CAP, ETA_CAP)
    return 2.0 * np.mean(np.logaddexp(0.0, eta) - y[None, :] * eta, axis=1)


def lasso_cv(y, design, family: str = "gaussian", folds: int = 10, seed: int = 0,
             n_lambda: int = 50, min_ratio: float = 1e-3,
             tol: float = 1e-7) -> tuple[float, FitSummary]:
    """K-fold cross-validated lasso.

    The path is 50 log-spaced penalties from :func:`lambda_max` down to
    ``1e-3`` times it, computed on the full data.  Held-out loss is squared
    error (Gaussian) or binomial deviance (logistic); the penalty with the
    smallest mean held-out loss is refitted on all observations.

    Coordinate descent stops when the largest squared coefficient change is
    below ``tol`` times the response variance (glmnet's criterion), and each
    path is truncated once the fit saturates.
    """
    y = np.asarray(y, dtype=float)
    _check_family(family, y)
    n = y.size
    if not n >= folds >= 2:
        raise ValueError("need n >= folds >= 2")
    if np.ptp(y) == 0:
        raise ValueError("response is constant")
    x = _as_design(design, n)
    cd_tol = float(np.sqrt(tol * np.var(y)))
    lmax = lambda_max(y, x, family)
    if lmax == 0:
        lmax = 1.0
    lambdas = lmax * np.logspace(0, np.log10(min_ratio), n_lambda)
    assign = np.random.default_rng(seed).permutation(np.arange(n) % folds)
    loss = np.zeros(n_lambda)
    for f in range(folds):
        test = assign == f
        train = ~test
        ytr = y[train]
        if np.ptp(ytr) == 0:
            # a single-class training fold: intercept-only predictions at every lambda
            eta = np.full((n_lambda, test.sum()), ytr[0] if family == "gaussian"
                          else (ETA_CAP if ytr[0] == 1 else -ETA_CAP))
        else:
            std = _Standardizer.fit(x[train])
            b0s, betas, _ = _path_fit(ytr, std.transform(x[train]), family, lambdas, cd_tol, 1000,
                                      truncate=True)
            eta = b0s[:, None] + betas @ std.transform(x[test]).T
        loss += _heldout_loss(y[test], eta, family) * test.sum()
    best = int(np.argmin(loss))
    std = _Standardizer.fit(x)
    b0s, betas, ok = _path_fit(y, std.transform(x), family, lambdas[: best + 1], cd_tol, 1000,
                               truncate=True)
    flags = () if ok else ("not_converged",)
    fit = _summary(y, x, std, family, b0s[-1], betas[-1], lambdas[best], lambdas, flags)
    return float(lambdas[best]), fit
