import numpy as np
import pytest

from ggmtest.glasso import (
    GlassoProblem,
    default_lambda,
    objective,
    penalty_matrix,
    profile_loglik,
    solve,
)
from ggmtest.graph import band_graph_precision, empty_graph, from_edge_list
from ggmtest.ggm import mvn_sample


def _cov(n, omega, seed):
    x = mvn_sample(n, np.zeros(omega.shape[0]), omega, np.random.default_rng(seed))
    xc = x - x.mean(axis=0)
    return xc.T @ xc / n


def test_zero_penalty_is_inverse():
    _, omega = band_graph_precision(6, 1, 0.3)
    s = _cov(50, omega, 0)
    res = solve(GlassoProblem(s, 0.0))
    np.testing.assert_allclose(res.precision, np.linalg.inv(s), rtol=1e-6)


def test_huge_penalty_zeroes_penalized_entries():
    _, omega = band_graph_precision(8, 2, 0.2)
    s = _cov(60, omega, 1)
    g = from_edge_list(8, [(0, 1), (2, 3)])
    res = solve(GlassoProblem(s, 1e6, g))
    pen = penalty_matrix(s, g, 1.0) > 0
    assert np.all(np.abs(res.precision[pen]) < 1e-8)
    np.linalg.cholesky(res.precision)


def _kkt(s, omega, pen, scale):
    grad = s - np.linalg.inv(omega)
    free = pen == 0
    assert np.all(np.abs(grad[free]) <= scale)
    nz = (~free) & (omega != 0)
    z = (~free) & (omega == 0)
    assert np.all(np.abs(grad[z]) <= pen[z] + scale)
    # stationarity: S - W + P sign(Omega) = 0 on nonzero penalized entries
    np.testing.assert_allclose(grad[nz], -pen[nz] * np.sign(omega[nz]), atol=scale)


def test_kkt_three_nodes_one_penalized():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((30, 3))
    s = np.cov(a.T, bias=True)
    g = from_edge_list(3, [(0, 1), (1, 2)])
    lam = 0.01
    res = solve(GlassoProblem(s, lam, g, tol=1e-10, max_iter=1000))
    assert res.converged
    _kkt(s, res.precision, penalty_matrix(s, g, lam), 1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_kkt_random(seed):
    _, omega = band_graph_precision(10, 2, 0.25)
    s = _cov(40, omega, 10 + seed)
    g = from_edge_list(10, [(i, i + 1) for i in range(9)])
    lam = default_lambda(10, 40)
    res = solve(GlassoProblem(s, lam, g, tol=1e-10, max_iter=2000))
    assert res.converged
    _kkt(s, res.precision, penalty_matrix(s, g, lam), 1e-5)
    assert np.allclose(res.precision, res.precision.T)


def test_edges_not_thresholded_to_zero():
    _, omega = band_graph_precision(8, 1, 0.3)
    s = _cov(100, omega, 3)
    g = from_edge_list(8, [(i, i + 1) for i in range(7)])
    res = solve(GlassoProblem(s, 10.0, g))
    for i, j in g.edges():
        assert res.precision[i, j] != 0


def test_objective_not_worse_than_simple_candidates():
    _, omega = band_graph_precision(6, 1, 0.3)
    s = _cov(30, omega, 4)
    pen = penalty_matrix(s, None, 0.2)
    res = solve(GlassoProblem(s, 0.2))
    best = objective(s, res.precision, pen)
    for cand in (np.diag(1 / np.diag(s)), np.linalg.inv(s), res.precision * 1.05):
        assert best <= objective(s, cand, pen) + 1e-9


def test_non_pd_sample_cov_regularized():
    x = np.random.default_rng(5).standard_normal((3, 6))
    s = np.cov(x.T, bias=True)
    res = solve(GlassoProblem(s, 0.5, empty_graph(6)))
    np.linalg.cholesky(res.precision)


def test_problem_validation():
    with pytest.raises(ValueError):
        GlassoProblem(np.ones((2, 3)), 0.1)
    with pytest.raises(ValueError):
        GlassoProblem(np.array([[1.0, 0.5], [0.4, 1.0]]), 0.1)
    with pytest.raises(ValueError):
        GlassoProblem(np.eye(2), -1.0)


def test_profile_loglik_closed_forms():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((20, 4))
    s = np.cov(a.T, bias=True)
    assert profile_loglik(s, np.eye(4), n=20) == pytest.approx(-20 * np.trace(s))
    inv = np.linalg.inv(s)
    assert profile_loglik(s, inv) >= profile_loglik(s, 1.1 * inv)


def test_profile_loglik_eigen_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        b = rng.standard_normal((5, 5))
        omega = b @ b.T + 0.5 * np.eye(5)
        c = rng.standard_normal((5, 5))
        s = c @ c.T / 5
        lam, vec = np.linalg.eigh(omega)
        ref = 7.0 * (np.sum(np.log(lam)) - np.sum(lam * np.einsum("ik,ij,jk->k", vec, s, vec)))
        assert profile_loglik(s, omega, n=7.0) == pytest.approx(ref, rel=1e-8)


def test_default_lambda_rate():
    assert default_lambda(20, 80) == pytest.approx(np.sqrt(np.log(20) / 80))
