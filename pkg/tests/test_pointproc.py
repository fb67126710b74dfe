import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssalab import (
    DuplicatePointError,
    ParameterError,
    PointSet,
    RngStream,
    Window,
    counts_in_log_bins,
    invert,
    sample_scale_invariant_ppp,
    spacings,
)
from ssalab.pointproc import backward_ratios, forward_ratios
from ssalab.stats import estimate_rate, poisson_dispersion_test, ppp_ratio_test, z_test

sorted_sets = st.lists(st.floats(0.01, 1e6, allow_nan=False), min_size=0, max_size=40,
                       unique=True).map(sorted)


def test_mean_count_matches_log_length():
    theta, win = 2.0, Window(1.0, math.e)
    counts = np.array([len(sample_scale_invariant_ppp(theta, win, RngStream(5, i)))
                       for i in range(10_000)])
    rep = z_test(counts.mean(), 2.0, math.sqrt(2.0 / counts.size), n=counts.size)
    assert abs(rep.statistic) < 3


def test_empty_window_gives_empty_set():
    ps = sample_scale_invariant_ppp(1.0, Window(5.0, 5.0), RngStream(1))
    assert len(ps) == 0


def test_sampler_rejects_bad_input():
    with pytest.raises(ParameterError):
        sample_scale_invariant_ppp(0.0, Window(1, 2), RngStream(1))
    with pytest.raises(ParameterError):
        sample_scale_invariant_ppp(1.0, Window(0.0, 2.0), RngStream(1))
    with pytest.raises(ParameterError):
        Window(2.0, 1.0)


@pytest.mark.parametrize("theta", [0.5, 1.5])
def test_forward_and_backward_ratios_are_beta(theta):
    ps = sample_scale_invariant_ppp(theta, Window.from_logs(0.0, 10_000 / theta), RngStream(6))
    assert ps.is_log
    assert ppp_ratio_test(forward_ratios(ps), theta).passed
    assert ppp_ratio_test(backward_ratios(ps), theta).passed


def test_counts_in_log_bins_pass_dispersion():
    ps = sample_scale_invariant_ppp(3.0, Window.from_logs(0.0, 2000.0), RngStream(7))
    assert poisson_dispersion_test(counts_in_log_bins(ps, 400)).passed


def test_spacings_example():
    ps = PointSet([1.0, 3.0, 7.0], Window(0.0, 10.0))
    sp = spacings(ps)
    np.testing.assert_array_equal(sp.points, [2.0, 4.0])
    assert sp.window == Window(0.0, 10.0)
    assert len(spacings(PointSet([2.0], Window(0.0, 3.0)))) == 0


def test_spacings_in_log_mode_match_linear():
    pts = [1.0, 3.0, 7.0, 7.5]
    lin = spacings(PointSet(pts, Window(0.5, 10.0)))
    lg = spacings(PointSet.from_logs(np.log(pts), Window.from_logs(math.log(0.5), math.log(10.0))))
    np.testing.assert_allclose(lg.points, lin.points, rtol=1e-12)


def test_invert_example_and_identity():
    ps = PointSet([0.5, 2.0], Window(0.25, 4.0))
    inv = invert(ps)
    np.testing.assert_array_equal(inv.points, [0.5, 2.0])
    assert inv.window == Window(0.25, 4.0)
    assert invert(inv) is ps


@given(sorted_sets)
def test_invert_is_involution(pts):
    ps = PointSet(pts, Window(0.005, 2e6))
    assert invert(invert(ps)) == ps
    fresh = PointSet(pts, Window(0.005, 2e6))
    assert invert(PointSet(invert(fresh).points, invert(fresh).window)).points == pytest.approx(pts)


@given(sorted_sets)
def test_spacings_sum_to_span(pts):
    ps = PointSet(pts, Window(0.0, 2e6))
    sp = spacings(ps)
    assert len(sp) == max(0, len(pts) - 1)
    if len(pts) > 1:
        assert sp.points.sum() == pytest.approx(pts[-1] - pts[0], rel=1e-9)


@given(sorted_sets)
@settings(max_examples=50)
def test_serialisation_round_trips(pts):
    ps = PointSet(pts, Window(0.005, 2e6))
    assert PointSet.from_json(ps.to_json()) == ps
    assert PointSet.from_csv(ps.to_csv()) == ps
    lg = PointSet.from_logs(np.log(pts), Window.from_logs(-5.0, 20.0))
    assert PointSet.from_json(lg.to_json()) == lg
    assert PointSet.from_csv(lg.to_csv()) == lg


def test_point_set_validation():
    with pytest.raises(DuplicatePointError):
        PointSet([1.0, 1.0], Window(0, 2))
    with pytest.raises(ValueError):
        PointSet([1.0, 3.0], Window(0, 2))
    with pytest.raises(ValueError):
        PointSet([2.0, 1.0], Window(0, 3))


def test_point_set_is_immutable():
    ps = PointSet([1.0, 2.0], Window(0, 3))
    with pytest.raises(ValueError):
        ps.points[0] = 0.5


def test_counts_in_log_bins_example():
    ps = PointSet([1.5, 2.5, 3.5], Window(1.0, 4.0))
    np.testing.assert_array_equal(counts_in_log_bins(ps, 2), [1, 2])
    np.testing.assert_array_equal(counts_in_log_bins(PointSet([], Window(1.0, 4.0)), 3), [0, 0, 0])
    # half-open bins: a point on an inner edge belongs to the lower bin
    np.testing.assert_array_equal(counts_in_log_bins(PointSet([2.0], Window(1.0, 4.0)), 2), [1, 0])


@pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
def test_scale_equivariance_of_bin_counts(c):
    base = sample_scale_invariant_ppp(2.0, Window(1.0, math.e ** 5), RngStream(12))
    scaled = base.scale(c)
    np.testing.assert_array_equal(counts_in_log_bins(scaled, 10), counts_in_log_bins(base, 10))


def test_inverted_ppp_is_ppp():
    ps = sample_scale_invariant_ppp(1.5, Window.from_logs(-3000.0, 3000.0), RngStream(13))
    assert ppp_ratio_test(invert(ps), 1.5).passed
    assert estimate_rate(invert(ps)) == estimate_rate(ps)
