import json
import math

import numpy as np
import pytest
from scipy import special

from ssalab import ParameterError, PointSet, RngStream, Window
from ssalab.pointproc import counts_in_log_bins, sample_scale_invariant_ppp
from ssalab.stats import (
    TestReport,
    binomial_band,
    bonferroni_alpha,
    estimate_rate,
    independence_test,
    kolmogorov_sf,
    ks_2samp_test,
    ks_statistic,
    ks_test,
    poisson_dispersion_test,
    ppp_ratio_test,
    z_test,
)


@pytest.mark.parametrize("lam", [0.05, 0.3, 0.7, 0.99, 1.0, 1.3, 2.0, 3.5])
def test_kolmogorov_sf_matches_reference(lam):
    assert kolmogorov_sf(lam) == pytest.approx(special.kolmogorov(lam), abs=1e-11)


def test_kolmogorov_sf_edges():
    assert kolmogorov_sf(0.0) == 1.0
    assert kolmogorov_sf(-1.0) == 1.0
    assert kolmogorov_sf(10.0) < 1e-80


def test_ks_statistic_example():
    # constant sample against U(0,1): D = 1/2
    assert ks_statistic(np.full(100, 0.5), lambda u: u) == pytest.approx(0.5)


def test_ks_rejects_constant_and_wrong_law():
    assert not ks_test(np.full(100, 0.5), lambda u: u).passed
    u = RngStream(1).uniform(5000)
    assert not ks_test(u ** 2, lambda v: v).passed


def test_ks_accepts_correct_law():
    assert ks_test(RngStream(2).uniform(5000), lambda v: v).passed


def test_ks_input_checks():
    with pytest.raises(TypeError):
        ks_test(np.linspace(0.1, 0.9, 50), lambda v: "nope")
    with pytest.raises(TypeError):
        ks_test(np.linspace(0.1, 0.9, 50), lambda v: np.full(3, 0.5))
    with pytest.raises(ParameterError):
        ks_test(np.linspace(0.1, 0.9, 10), lambda v: v)


def test_ks_2samp():
    rng = RngStream(3)
    assert ks_2samp_test(rng.normal(2000), rng.normal(3000)).passed
    assert not ks_2samp_test(rng.normal(2000), rng.normal(2000) + 0.3).passed


def test_dispersion():
    rng = RngStream(4)
    assert poisson_dispersion_test(rng.poisson(2.0, 200)).passed
    assert not poisson_dispersion_test(np.r_[np.zeros(100), np.full(100, 10)]).passed
    # under-dispersion is rejected too: the test is two-sided
    assert not poisson_dispersion_test(np.full(200, 3)).passed
    rep = poisson_dispersion_test(np.zeros(50))
    assert rep.passed and "inconclusive" in rep.note


def test_dispersion_on_ppp_bins():
    ps = sample_scale_invariant_ppp(1.0, Window.from_logs(0.0, 500.0), RngStream(5))
    assert poisson_dispersion_test(counts_in_log_bins(ps, 100)).passed


def test_independence():
    rng = RngStream(6)
    x = rng.normal(1000)
    assert independence_test(x, rng.normal(1000), 999, rng.derive(1)).passed
    assert not independence_test(x, x, 999, rng.derive(2)).passed
    rep = independence_test(x, np.ones(1000), 99, rng.derive(3))
    assert rep.passed and "inconclusive" in rep.note
    with pytest.raises(ParameterError):
        independence_test(x[:10], x[:10], 99, rng)


def test_independence_p_value_resolution():
    rng = RngStream(7)
    x = rng.normal(200)
    rep = independence_test(x, x, 99, rng.derive(1))
    assert rep.p_value == pytest.approx(1 / 100)


def test_estimate_rate_example():
    ps = PointSet(np.exp(np.linspace(0.5, 9.5, 20)), Window(1.0, math.exp(10.0)))
    assert estimate_rate(ps) == pytest.approx(2.0, rel=1e-12)
    assert estimate_rate(PointSet([], Window(1.0, 5.0))) == 0.0
    with pytest.raises(ParameterError):
        estimate_rate(PointSet([], Window(1.0, 1.0)))
    with pytest.raises(ParameterError):
        estimate_rate(PointSet([], Window(0.0, 1.0)))


def test_estimate_rate_is_unbiased():
    est = [estimate_rate(sample_scale_invariant_ppp(1.5, Window(1.0, 20.0), RngStream(8, i)))
           for i in range(4000)]
    se = math.sqrt(1.5 / math.log(20.0) / len(est))
    assert abs(np.mean(est) - 1.5) < 3 * se


@pytest.mark.parametrize("c", [0.25, 8.0, 2.0 ** -30])
def test_estimate_rate_scale_invariance_exact(c):
    ps = sample_scale_invariant_ppp(2.0, Window(0.3, 70.0), RngStream(9))
    assert estimate_rate(ps.scale(c)) == estimate_rate(ps)


@pytest.mark.parametrize("c", [0.1, 3.0, 1e5])
def test_estimate_rate_scale_invariance_general(c):
    ps = sample_scale_invariant_ppp(2.0, Window(0.3, 70.0), RngStream(9))
    assert estimate_rate(ps.scale(c)) == pytest.approx(estimate_rate(ps), rel=1e-13)


def test_ppp_ratio_test_accepts_point_sets_and_arrays():
    ps = sample_scale_invariant_ppp(2.0, Window.from_logs(0.0, 2000.0), RngStream(10))
    a = ppp_ratio_test(ps, 2.0)
    b = ppp_ratio_test(np.exp(-np.diff(np.r_[0.0, ps.log_points])), 2.0)
    assert a.passed and a.statistic == pytest.approx(b.statistic)
    assert not ppp_ratio_test(ps, 1.0).passed


def test_report_json_schema_and_determinism():
    rng = RngStream(11, 3)
    rep = ks_test(rng.uniform(100), lambda u: u, rng=rng)
    d = json.loads(rep.to_json())
    assert set(d) == {"name", "statistic", "p_value", "n", "alpha", "pass", "seed", "stream"}
    assert d["seed"] == 11 and d["stream"] == 3
    rng2 = RngStream(11, 3)
    assert ks_test(rng2.uniform(100), lambda u: u, rng=rng2).to_json() == rep.to_json()


def test_report_pass_rule_and_validation():
    assert TestReport("t", 0.0, 0.01, 10, 0.01).passed
    assert not TestReport("t", 0.0, 0.0099, 10, 0.01).passed
    with pytest.raises(ValueError):
        TestReport("t", 0.0, 1.5, 10, 0.01)
    assert "PASS" in TestReport("t", 0.0, 0.5, 10, 0.01).line()


def test_z_test():
    rep = z_test(1.03, 1.0, 0.01, n=100)
    assert rep.statistic == pytest.approx(3.0)
    assert rep.p_value == pytest.approx(0.0026998, rel=1e-4)
    assert z_test(1.0, 1.0, 0.0, n=5).passed
    assert not z_test(1.1, 1.0, 0.0, n=5).passed


def test_bonferroni_and_binomial_band():
    assert bonferroni_alpha(0.01, 3) == pytest.approx(0.01 / 3)
    assert bonferroni_alpha(0.01, 0) == 0.01
    assert binomial_band(200, 0.05) == (3, 19)
