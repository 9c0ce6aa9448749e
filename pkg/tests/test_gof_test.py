import numpy as np
import pytest

from ggmtest.ggm import mvn_sample
from ggmtest.gof_stats import GofStatistic, StatKind
from ggmtest.gof_test import GofTestSpec, run_gof, run_gof_multi, run_local_gof
from ggmtest.graph import band_graph_precision, from_edge_list
from ggmtest.pvalue import PvalueMode
from ggmtest.result import TestResult
from ggmtest.sampler import SamplerConfig, SamplerPreconditionError


def _band(n=30, p=8, seed=0):
    g, omega = band_graph_precision(p, 1, 0.2)
    return g, mvn_sample(n, np.zeros(p), omega, np.random.default_rng(seed))


def test_constant_statistic_gives_one():
    g, x = _band()
    res = run_gof(x, GofTestSpec(g, statistic=lambda m: 1.0, sampler=SamplerConfig(10)))
    assert res.pvalue == 1.0 and res.num_copies == 10


def test_strictly_largest_observed():
    g, x = _band()
    # the observed matrix is the only one whose first row equals x's
    first = x[0].copy()
    stat = lambda m: float(np.array_equal(m[0], first))
    res = run_gof(x, GofTestSpec(g, statistic=stat, sampler=SamplerConfig(100)))
    assert res.pvalue == pytest.approx(1 / 101)


def test_result_contents_and_determinism():
    g, x = _band()
    spec = GofTestSpec(g, sampler=SamplerConfig(20, seed=3))
    a, b = run_gof(x, spec), run_gof(x, spec)
    assert a.statistic == "F_SUM" and a.mode == "conservative_one_sided"
    assert a.seed == 3 and a.iterations == 3 and a.copy_data is None
    assert np.array_equal(a.copies, b.copies) and a.pvalue == b.pvalue
    kept = run_gof(x, GofTestSpec(g, sampler=SamplerConfig(5), keep_copies=True))
    assert kept.copy_data.shape == (5, 30, 8)


@pytest.mark.parametrize("mode", list(PvalueMode))
def test_modes(mode):
    g, x = _band()
    res = run_gof(x, GofTestSpec(g, sampler=SamplerConfig(10, seed=1), pvalue_mode=mode))
    assert 0 < res.pvalue <= 1 and res.mode == mode.value


def test_precondition_propagates():
    g, x = _band(n=3)
    with pytest.raises(SamplerPreconditionError):
        run_gof(x, GofTestSpec(g, sampler=SamplerConfig(2)))


def test_spec_validation():
    g, _ = _band()
    with pytest.raises(ValueError):
        GofTestSpec(g, sampler=SamplerConfig(order=(0, 1)))
    with pytest.raises(ValueError):
        GofTestSpec(g, local_set=())
    with pytest.raises(ValueError):
        GofTestSpec(g, local_set=(1, 1))
    with pytest.raises(ValueError):
        GofTestSpec(g, local_set=(1, 2), sampler=SamplerConfig(order=(1, 3)))
    spec = GofTestSpec(g, local_set=(5, 2))
    assert spec.sampler.order == (2, 5)
    with pytest.raises(ValueError):
        run_local_gof(np.zeros((10, 8)), GofTestSpec(g))


def test_local_full_set_equals_global():
    g, x = _band()
    cfg = SamplerConfig(15, seed=4)
    a = run_gof(x, GofTestSpec(g, sampler=cfg))
    b = run_local_gof(x, GofTestSpec(g, sampler=cfg, local_set=tuple(range(8))))
    assert np.array_equal(a.copies, b.copies) and a.pvalue == b.pvalue


def test_local_copies_keep_outside_columns():
    g, x = _band()
    spec = GofTestSpec(g, statistic=GofStatistic(StatKind.F_SUM_LOCAL, local_set=(2, 3)),
                       sampler=SamplerConfig(6), local_set=(2, 3), keep_copies=True)
    res = run_local_gof(x, spec)
    outside = [0, 1, 4, 5, 6, 7]
    assert np.array_equal(res.copy_data[:, :, outside],
                          np.broadcast_to(x[:, outside], (6, 30, 6)))


def test_local_null_calibration_with_wrong_global_graph():
    # truth is a chain; the hypothesised graph drops edge (4, 5), but the local
    # hypotheses at nodes 0 and 1 remain true
    p = 6
    _, omega = band_graph_precision(p, 1, 0.4)
    g = from_edge_list(p, [(0, 1), (1, 2), (2, 3), (3, 4)])
    rng = np.random.default_rng(5)
    stat = GofStatistic(StatKind.F_SUM_LOCAL, local_set=(0, 1))
    pvals = []
    for r in range(500):
        x = mvn_sample(20, np.zeros(p), omega, rng)
        spec = GofTestSpec(g, statistic=stat, sampler=SamplerConfig(19, seed=r), local_set=(0, 1))
        pvals.append(run_local_gof(x, spec).pvalue)
    pvals = np.array(pvals)
    for a in (0.05, 0.1, 0.25):
        assert np.mean(pvals <= a) <= a + 3 * np.sqrt(a * (1 - a) / 500)


def test_multi_matches_single_runs():
    g, x = _band()
    cfg = SamplerConfig(12, seed=8)
    stats = [GofStatistic(StatKind.PRC), GofStatistic(StatKind.F_MAX)]
    multi = run_gof_multi(x, g, stats, cfg)
    for s in stats:
        single = run_gof(x, GofTestSpec(g, statistic=s, sampler=cfg))
        assert multi[s.name].pvalue == single.pvalue
        np.testing.assert_array_equal(multi[s.name].copies, single.copies)


def test_result_round_trip():
    g, x = _band()
    res = run_gof(x, GofTestSpec(g, sampler=SamplerConfig(7)))
    res.extra["note"] = np.int64(3)
    back = TestResult.from_dict(__import__("json").loads(res.to_json()))
    assert back.pvalue == res.pvalue and back.num_copies == 7
    np.testing.assert_array_equal(back.copies, res.copies)
    assert back.extra["note"] == 3
    assert res.reject(1.0) and not res.reject(0.0)


@pytest.mark.parametrize("patch", [{"pvalue": 0.0}, {"M": 3}, {"pvalue": 1.5}])
def test_result_validation(patch):
    g, x = _band()
    d = run_gof(x, GofTestSpec(g, sampler=SamplerConfig(7))).to_dict()
    d.update(patch)
    with pytest.raises(ValueError):
        TestResult.from_dict(d)
    d = {k: v for k, v in d.items() if k != "seed"}
    with pytest.raises(ValueError):
        TestResult.from_dict(d)
