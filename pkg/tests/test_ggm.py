import numpy as np
import pytest

from ggmtest.ggm import (
    kl_lower_bound,
    mvn_sample,
    standardize_to_unit_variances,
    stats_close,
    sufficient_statistic,
)
from ggmtest.graph import band_graph_precision, empty_graph, from_edge_list


def test_zero_matrix_statistic():
    g = from_edge_list(3, [(0, 1)])
    s = sufficient_statistic(np.zeros((4, 3)), g)
    assert np.all(s.column_sums == 0) and all(v == 0 for v in s.gram_entries.values())


def test_empty_graph_keeps_diagonal_only():
    s = sufficient_statistic(np.ones((3, 4)), empty_graph(4))
    assert set(s.gram_entries) == {(i, i) for i in range(4)}


def test_path_graph_matches_full_gram():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 4))
    g = from_edge_list(4, [(0, 1), (1, 2), (2, 3)])
    s = sufficient_statistic(x, g)
    gram = x.T @ x
    assert set(s.gram_entries) == {(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (1, 2), (2, 3)}
    for (i, j), v in s.gram_entries.items():
        assert abs(v - gram[i, j]) < 1e-12
    np.testing.assert_allclose(s.column_sums, x.sum(axis=0), atol=1e-12)


def test_row_permutation_invariance():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((10, 3))
    g = from_edge_list(3, [(0, 2)])
    assert stats_close(sufficient_statistic(x, g), sufficient_statistic(x[::-1], g), 1e-12)


def test_stats_close_detects_perturbation():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((10, 3))
    g = from_edge_list(3, [(0, 1)])
    a = sufficient_statistic(x, g)
    assert stats_close(a, a, 1e-8)
    entries = dict(a.gram_entries)
    entries[(0, 1)] += 1e-3
    b = type(a)(a.column_sums, entries)
    assert not stats_close(a, b, 1e-8)
    with pytest.raises(KeyError):
        stats_close(a, sufficient_statistic(x, empty_graph(3)))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        sufficient_statistic(np.zeros((3, 2)), empty_graph(3))


def test_mvn_identity_means():
    x = mvn_sample(10000, np.zeros(3), np.eye(3), np.random.default_rng(3))
    assert np.all(np.abs(x.mean(axis=0)) < 4 / np.sqrt(10000))


def test_mvn_scaled_precision_variances():
    x = mvn_sample(10000, np.zeros(3), 4 * np.eye(3), np.random.default_rng(4))
    assert np.all(np.abs(x.var(axis=0) / 0.25 - 1) < 0.1)


def test_mvn_deterministic():
    _, omega = band_graph_precision(5, 1, 0.2)
    a = mvn_sample(7, np.ones(5), omega, np.random.default_rng(5))
    b = mvn_sample(7, np.ones(5), omega, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_mvn_recovers_precision():
    _, omega = band_graph_precision(4, 1, 0.3)
    n = 50000
    x = mvn_sample(n, np.zeros(4), omega, np.random.default_rng(6))
    est = np.linalg.inv(np.cov(x.T))
    # asymptotic sd of a precision entry: sqrt((w_ij^2 + w_ii w_jj) / n)
    se = np.sqrt((omega**2 + np.outer(np.diag(omega), np.diag(omega))) / n)
    assert np.all(np.abs(est - omega) < 5 * se)


def test_mvn_not_pd():
    with pytest.raises(ValueError):
        mvn_sample(3, np.zeros(2), np.array([[1.0, 2], [2, 1]]), np.random.default_rng(0))


def test_standardize_scalar_case():
    np.testing.assert_allclose(standardize_to_unit_variances(4 * np.eye(3)), np.eye(3))


def test_standardize_band():
    _, omega = band_graph_precision(15, 3, 0.15)
    out = standardize_to_unit_variances(omega)
    np.testing.assert_allclose(np.diag(np.linalg.inv(out)), 1, atol=1e-8)
    assert np.array_equal(out != 0, omega != 0)
    np.testing.assert_allclose(standardize_to_unit_variances(out), out, atol=1e-10)


def test_kl_lower_bound():
    assert kl_lower_bound(0.0) == 0.0
    assert abs(kl_lower_bound(0.2) - 0.0204) < 1e-4
    vals = [kl_lower_bound(s) for s in np.linspace(0.01, 0.99, 50)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        kl_lower_bound(1.0)
