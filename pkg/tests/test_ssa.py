import math

import numpy as np
import pytest

from ssalab import (
    BetaTheta1,
    Gamma,
    InfiniteRateError,
    JumpTail,
    KeyFunction,
    ParameterError,
    RngStream,
    SsaPath,
    Window,
    hold_jump_step,
    jump_sizes_of,
    range_of,
    rate_of,
    seed_at_level_crossing,
    simulate_above_level,
    validate_log_moment,
)
from ssalab.pointproc import spacings
from ssalab.ssa import (
    intensity_projection_check,
    jump_times_of,
    parse_jump,
    simulate_two_parameter,
    sizes_in_window,
)
from ssalab.stats import (
    independence_test,
    ks_2samp_test,
    ks_test,
    poisson_dispersion_test,
    ppp_ratio_test,
    z_test,
)

MAJORANT_KEY = KeyFunction.concave_majorant()


def range_count(key, log_b, rng):
    """Number of range points in ``(1, e^log_b]`` for a path crossing level 1."""
    n = int(3 * rate_of(key) * log_b) + 40
    path = simulate_above_level(1.0, n, key, rng)
    assert path.log_t[-1] > log_b
    return int(np.count_nonzero(path.log_t <= log_b))


# key functions ------------------------------------------------------------------


def test_rate_of_examples():
    assert rate_of(KeyFunction.gamma(2.0, 3.0)) == 2.0
    assert rate_of(MAJORANT_KEY) == 0.5
    half = KeyFunction(2.0, parse_jump("tab:0:0.5;1:0"))
    assert rate_of(half) == 1.0


def test_key_function_values():
    key = KeyFunction.gamma(2.0, 1.0)
    assert key.k(0.0) == 2.0
    assert key.k(1.0) == pytest.approx(2.0 * math.exp(-1.0), rel=1e-15)


def test_from_key():
    key = KeyFunction.from_key(lambda x: 2.0 * math.exp(-x))
    assert key.theta == pytest.approx(2.0)
    assert float(key.jump.sf(1.0)) == pytest.approx(math.exp(-1.0))
    with pytest.raises(InfiniteRateError):
        KeyFunction.from_key(lambda x: 1.0 / x)
    with pytest.raises(InfiniteRateError):
        KeyFunction.from_key(lambda x: -math.log(x))


def test_invalid_keys():
    with pytest.raises(ParameterError):
        KeyFunction(0.0, parse_jump("exp:1"))
    with pytest.raises(ParameterError):
        KeyFunction(1.0, parse_jump("point:0"))
    with pytest.raises(ParameterError):
        parse_jump("tab:0:1;2:0.5;1:0")


def test_log_moment_check():
    assert validate_log_moment(KeyFunction.gamma(1.0))
    assert validate_log_moment(MAJORANT_KEY)
    slow = KeyFunction(1.0, JumpTail(lambda x: 1.0 / np.log(math.e + x)))
    fast = KeyFunction(1.0, JumpTail(lambda x: 1.0 / np.log(math.e + x) ** 2))
    assert not validate_log_moment(slow)
    assert validate_log_moment(fast)
    assert not validate_log_moment(KeyFunction(1.0, parse_jump("tab:0:1;1:0.5")))
    assert validate_log_moment(KeyFunction(1.0, parse_jump("tab:0:1;1:0.5;2:0")))


def test_tabulated_tail_sampling():
    jump = parse_jump("tab:0:1;1:0.5;2:0")
    assert parse_jump(str(jump)).sf(1.5) == 0.5
    x = jump.sample(RngStream(3), 20_000)
    assert set(np.unique(x).tolist()) == {1.0, 2.0}
    frac = np.mean(x == 2.0)
    assert abs(frac - 0.5) < 4 * math.sqrt(0.25 / x.size)
    assert jump.mean == pytest.approx(1.5)


def test_callable_tail_sampling():
    jump = JumpTail(lambda x: np.exp(-2.0 * x))
    x = jump.sample(RngStream(4), 5000)
    assert ks_test(x, Gamma(1.0, 2.0)).passed
    assert jump.mean == pytest.approx(0.5, rel=1e-8)


# hold-jump steps ----------------------------------------------------------------


def test_hold_time_is_pareto():
    key = KeyFunction.gamma(1.0)
    rng = RngStream(5)
    s_new = np.array([hold_jump_step(1.0, 0.0, key, rng)[0] for _ in range(10_000)])
    assert ks_test(s_new, lambda x: 1.0 - 1.0 / x).passed


def test_jump_over_new_time_is_generic_jump():
    key = KeyFunction.gamma(2.0, 1.0)
    rng = RngStream(6)
    steps = [hold_jump_step(1.0, 3.0, key, rng) for _ in range(10_000)]
    ratio = np.array([(t - 3.0) / s for s, t in steps])
    assert all(s > 1.0 and t > 3.0 for s, t in steps)
    assert ks_test(ratio, Gamma(1.0, 1.0)).passed


def test_hold_jump_step_errors():
    with pytest.raises(ParameterError):
        hold_jump_step(0.0, 1.0, KeyFunction.gamma(1.0), RngStream(1))


# level crossing -----------------------------------------------------------------


def test_exact_crossing_law():
    key = KeyFunction.gamma(1.5)
    rng = RngStream(7)
    cs = [seed_at_level_crossing(1.0, key, rng)[0] for _ in range(10_000)]
    G = np.array([c.G for c in cs])
    inv_s = 1.0 / np.array([c.S for c in cs])
    assert ks_test(G, BetaTheta1(1.5)).passed
    assert ks_test(inv_s, Gamma(1.5, 1.0)).passed
    assert independence_test(G, inv_s, 499, rng.derive(1)).passed
    assert all(c.G <= 1.0 < c.D and c.exact for c in cs)


def test_exact_crossing_path_is_consistent():
    c, path = seed_at_level_crossing(2.0, KeyFunction.gamma(1.0, 3.0), RngStream(8))
    assert path.T0 == pytest.approx(c.G)
    assert path.T[0] == pytest.approx(c.D)
    assert path.S[0] == pytest.approx(c.S)
    assert math.exp(path.log_jumps[0]) == pytest.approx(c.D - c.G, rel=1e-12)


def test_forward_crossing_matches_earlier_start():
    a, b = RngStream(9, 0), RngStream(9, 1)
    G1 = [seed_at_level_crossing(1.0, MAJORANT_KEY, a)[0].G for _ in range(3000)]
    G2 = [seed_at_level_crossing(1.0, MAJORANT_KEY, b, tol=1e-5)[0].G for _ in range(3000)]
    assert ks_2samp_test(G1, G2).passed


def test_forward_and_exact_agree_for_gamma_key():
    key = KeyFunction.gamma(2.0)
    a, b = RngStream(10, 0), RngStream(10, 1)
    G1 = [seed_at_level_crossing(1.0, key, a, method="exact")[0].G for _ in range(3000)]
    G2 = [seed_at_level_crossing(1.0, key, b, method="forward", tol=1e-4)[0].G for _ in range(3000)]
    assert ks_2samp_test(G1, G2).passed


def test_crossing_scales_with_level():
    a, b = RngStream(11, 0), RngStream(11, 1)
    r1 = [seed_at_level_crossing(1.0, MAJORANT_KEY, a)[0].D for _ in range(3000)]
    r2 = [seed_at_level_crossing(1000.0, MAJORANT_KEY, b)[0].D / 1000.0 for _ in range(3000)]
    assert ks_2samp_test(np.log(r1), np.log(r2)).passed


def test_crossing_errors():
    key = KeyFunction.gamma(1.0)
    with pytest.raises(ParameterError):
        seed_at_level_crossing(0.0, key, RngStream(1))
    with pytest.raises(ParameterError):
        seed_at_level_crossing(1.0, key, RngStream(1), tol=1.5)
    with pytest.raises(ParameterError):
        seed_at_level_crossing(1.0, MAJORANT_KEY, RngStream(1), method="exact")
    with pytest.raises(ParameterError):
        simulate_above_level(1.0, 0, key, RngStream(1))


# paths --------------------------------------------------------------------------


def test_path_invariants():
    path = simulate_above_level(1.0, 5000, KeyFunction.gamma(0.5), RngStream(12))
    assert len(path) == 5000
    assert np.all(np.diff(path.log_s) > 0) and np.all(np.diff(path.log_t) > 0)
    assert path.log_t0 <= 0.0 < path.log_t[0]
    # far beyond the double range
    assert path.log_t[-1] > 1000.0


def test_range_and_sizes_example():
    path = SsaPath.from_values([1.0, 2.0, 3.0], [1.2, 1.9, 3.0], 0.8)
    r = range_of(path)
    np.testing.assert_allclose(r.points, [1.2, 1.9, 3.0])
    assert r.window.lo == pytest.approx(0.8) and r.window.hi == pytest.approx(3.0)
    np.testing.assert_allclose(jump_sizes_of(path).points, [0.4, 0.7, 1.1], rtol=1e-12)
    np.testing.assert_allclose(jump_times_of(path).points, [1.0, 2.0, 3.0])


def test_sizes_are_range_spacings_plus_first_jump():
    path = simulate_above_level(1.0, 200, KeyFunction.gamma(2.0), RngStream(13))
    gaps = np.sort(np.r_[spacings(range_of(path)).log_points, path.log_jumps[0]])
    np.testing.assert_allclose(gaps, jump_sizes_of(path).log_points, rtol=1e-9, atol=1e-9)


def test_path_csv():
    path = simulate_above_level(1.0, 3, KeyFunction.gamma(1.0), RngStream(14))
    lines = path.to_csv().splitlines()
    assert lines[0].startswith("#") and "theta=1.0" in lines[0]
    assert lines[1] == "index,S,T,log_S,log_T"
    assert len(lines) == 2 + 1 + 3


def test_range_of_gamma_path_is_ppp():
    path = simulate_above_level(1.0, 5000, KeyFunction.gamma(0.5), RngStream(15))
    assert ppp_ratio_test(range_of(path), 0.5, anchor=1.0).passed
    lr = np.diff(np.r_[0.0, path.log_t])
    assert independence_test(lr[:-1], lr[1:], 499, RngStream(15, 1)).passed


def test_jump_times_are_ppp_for_non_gamma_key():
    path = simulate_above_level(1.0, 5000, MAJORANT_KEY, RngStream(16))
    ratios = np.exp(-np.diff(path.log_s))
    assert ks_test(ratios, BetaTheta1(0.5)).passed
    lr = np.log(ratios)
    assert independence_test(lr[:-1], lr[1:], 499, RngStream(16, 1)).passed


@pytest.mark.parametrize("key", [KeyFunction.gamma(1.0), MAJORANT_KEY], ids=["gamma", "majorant-key"])
def test_range_rate(key):
    counts = np.array([range_count(key, 4.0, RngStream(17, i)) for i in range(600)])
    theta = rate_of(key)
    rep = z_test(counts.mean(), 4.0 * theta, counts.std(ddof=1) / math.sqrt(counts.size), n=counts.size)
    assert abs(rep.statistic) < 3


def test_sizes_in_window_is_complete():
    key = KeyFunction.gamma(1.0)
    ps, path = sizes_in_window(key, 1.0, 3000.0, RngStream(18))
    assert ppp_ratio_test(ps, 1.0).passed
    assert abs(len(ps) - 3000) < 4 * math.sqrt(3000)
    assert path.log_s[-1] > 3000.0
    with pytest.raises(ParameterError):
        sizes_in_window(key, 1.0, -1.0, RngStream(1))


# the jump field -----------------------------------------------------------------


@pytest.mark.parametrize("a", [1.0, math.inf])
def test_intensity_projection(a):
    rep = intensity_projection_check(KeyFunction.gamma(1.5, 1.0), a, 5000, RngStream(19))
    assert rep.passed


def test_intensity_projection_outside_support():
    key = KeyFunction(1.0, parse_jump("tab:0:1;0.1:0"))
    rep = intensity_projection_check(key, 1.0, 1000, RngStream(20))
    assert rep.p_value == 1.0 and "outside" in rep.note


def test_intensity_projection_rejects_bad_input():
    key = KeyFunction.gamma(1.0)
    with pytest.raises(ParameterError):
        intensity_projection_check(key, 0.0, 10, RngStream(21))
    with pytest.raises(ParameterError):
        intensity_projection_check(key, 1.0, 10, RngStream(21), window=(2.0, 1.0))


def test_two_parameter_field():
    key = KeyFunction.gamma(1.0)
    win = Window(1.0, math.e)
    assert len(simulate_two_parameter(key, win, 0.0, RngStream(1))) == 0
    fields = [simulate_two_parameter(key, win, 2.0, RngStream(22, i)) for i in range(1000)]
    counts = np.array([len(f) for f in fields])
    assert poisson_dispersion_test(counts).passed
    assert abs(z_test(counts.mean(), 2.0, math.sqrt(2.0 / 1000), n=1000).statistic) < 3
    f = fields[0]
    ss, ww = np.meshgrid(np.geomspace(1.0, math.e, 7), np.linspace(0, 2, 7), indexing="ij")
    v = f.value(ss, ww)
    assert np.all(np.diff(v, axis=0) >= 0) and np.all(np.diff(v, axis=1) >= 0)
    assert f.value(math.e, 2.0) == pytest.approx(f.x.sum())
    assert f.jump_count(2.0) == len(f)
    assert f.to_csv().splitlines()[0] == "s,w,x"
