"""Goodness-of-fit, dispersion and independence tests with uniform reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from .distributions import BetaTheta1, DistSpec, ParameterError, RngStream
from .pointproc import PointSet, forward_ratios

__all__ = [
    "TestReport",
    "kolmogorov_sf",
    "ks_statistic",
    "ks_test",
    "ks_2samp_test",
    "poisson_dispersion_test",
    "independence_test",
    "z_test",
    "estimate_rate",
    "ppp_ratio_test",
    "bonferroni_alpha",
    "binomial_band",
]

# Below this sample size the Stephens correction is applied to the statistic.
_ASYMPTOTIC_N = 1000


@dataclass(frozen=True)
class TestReport:
    """Outcome of one statistical test.

    ``passed`` is ``p_value >= alpha``. ``seed``/``stream`` record which random
    stream produced the data (or drove a permutation test), when known.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    p_value: float
    n: int
    alpha: float
    seed: int | None = None
    stream: int | None = None
    note: str = field(default="", compare=False)

    def __post_init__(self):
        p = float(self.p_value)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
        object.__setattr__(self, "p_value", p)
        object.__setattr__(self, "statistic", float(self.statistic))
        object.__setattr__(self, "n", int(self.n))

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def with_alpha(self, alpha: float) -> "TestReport":
        return TestReport(self.name, self.statistic, self.p_value, self.n, alpha,
                          self.seed, self.stream, self.note)

    def with_provenance(self, rng: RngStream | None) -> "TestReport":
        if rng is None:
            return self
        return TestReport(self.name, self.statistic, self.p_value, self.n, self.alpha,
                          rng.seed, rng.stream, self.note)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "alpha": self.alpha,
            "pass": self.passed,
            "seed": self.seed,
            "stream": self.stream,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.name}: stat={self.statistic:.6g} p={self.p_value:.4g} "
                f"n={self.n} alpha={self.alpha:.3g}" + (f" ({self.note})" if self.note else ""))


def _provenance(rng):
    return (rng.seed, rng.stream) if rng is not None else (None, None)


# -----------------------------------------------------------------------------
# Kolmogorov-Smirnov
# -----------------------------------------------------------------------------


def kolmogorov_sf(lam: float) -> float:
    """``P(K > lam)`` for the Kolmogorov limit law.

    Uses the alternating series ``2 Σ (-1)^(k-1) exp(-2 k² λ²)`` for ``λ >= 1``
    and the Jacobi-theta form for small ``λ``, truncating once terms fall
    below 1e-12.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.0:
        # P(K <= λ) = sqrt(2π)/λ Σ_{k>=1} exp(-(2k-1)² π² / (8 λ²))
        c = math.pi ** 2 / (8.0 * lam * lam)
        total, k = 0.0, 1
        while True:
            term = math.exp(-(2 * k - 1) ** 2 * c)
            total += term
            if term < 1e-12 * max(total, 1e-300) or k > 100:
                break
            k += 1
        cdf = math.sqrt(2.0 * math.pi) / lam * total
        return min(1.0, max(0.0, 1.0 - cdf))
    total, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-12 or k > 100:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def _ks_pvalue(d: float, n_eff: float) -> float:
    rn = math.sqrt(n_eff)
    lam = d * rn if n_eff >= _ASYMPTOTIC_N else d * (rn + 0.12 + 0.11 / rn)
    return kolmogorov_sf(lam)


def ks_statistic(sample, cdf) -> float:
    """``sup |F_n - F|`` for a sample against an evaluable cdf."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    try:
        f = np.asarray(cdf(x), dtype=np.float64)
    except Exception as exc:
        raise TypeError("cdf is not evaluable on the sample") from exc
    if f.shape != x.shape or np.isnan(f).any():
        raise TypeError("cdf must return one finite value per sample point")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_test(sample, cdf, *, alpha: float = 0.01, name: str = "ks",
            rng: RngStream | None = None) -> TestReport:
    """One-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    x = np.asarray(sample, dtype=np.float64).reshape(-1)
    if x.size < 20:
        raise ParameterError("ks_test needs at least 20 observations")
    if isinstance(cdf, DistSpec):
        cdf = cdf.cdf
    d = ks_statistic(x, cdf)
    seed, stream = _provenance(rng)
    return TestReport(name, d, _ks_pvalue(d, x.size), x.size, alpha, seed, stream)


def ks_2samp_test(a, b, *, alpha: float = 0.01, name: str = "ks2",
                  rng: RngStream | None = None) -> TestReport:
    """Two-sample Kolmogorov-Smirnov test, ``n_eff = n1 n2 / (n1 + n2)``."""
    a = np.sort(np.asarray(a, dtype=np.float64).reshape(-1))
    b = np.sort(np.asarray(b, dtype=np.float64).reshape(-1))
    if a.size < 20 or b.size < 20:
        raise ParameterError("ks_2samp_test needs at least 20 observations per sample")
    grid = np.concatenate((a, b))
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    n_eff = a.size * b.size / (a.size + b.size)
    seed, stream = _provenance(rng)
    return TestReport(name, d, _ks_pvalue(d, n_eff), a.size + b.size, alpha, seed, stream)


# -----------------------------------------------------------------------------
# counts and independence
# -----------------------------------------------------------------------------


def poisson_dispersion_test(counts, *, alpha: float = 0.01, name: str = "dispersion",
                            rng: RngStream | None = None) -> TestReport:
    """Index-of-dispersion test: ``(n-1) s² / mean`` against chi-square(n-1), two-sided."""
    c = np.asarray(counts, dtype=np.float64).reshape(-1)
    if c.size < 10:
        raise ParameterError("dispersion test needs at least 10 counts")
    if (c < 0).any():
        raise ParameterError("counts must be non-negative")
    seed, stream = _provenance(rng)
    mean = c.mean()
    if mean == 0.0:
        return TestReport(name, 0.0, 1.0, c.size, alpha, seed, stream,
                          note="inconclusive: all counts zero")
    stat = float(np.sum((c - mean) ** 2) / mean)
    df = c.size - 1
    p = min(1.0, 2.0 * min(_sps.chi2.cdf(stat, df), _sps.chi2.sf(stat, df)))
    return TestReport(name, stat, p, c.size, alpha, seed, stream)


def independence_test(x, y, n_perm: int, rng: RngStream, *, alpha: float = 0.01,
                      name: str = "independence") -> TestReport:
    """Permutation test on ``|corr(x, y)|``; p = (1 + #exceed) / (1 + n_perm)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise ParameterError("x and y must have equal length")
    if x.size < 50:
        raise ParameterError("independence test needs at least 50 pairs")
    if n_perm < 1:
        raise ParameterError("n_perm must be positive")
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return TestReport(name, 0.0, 1.0, x.size, alpha, rng.seed, rng.stream,
                          note="inconclusive: zero variance")
    zx = (x - x.mean()) / sx
    zy = (y - y.mean()) / sy
    n = x.size
    observed = abs(float(zx @ zy) / n)
    exceed = 0
    chunk = max(1, min(n_perm, 2_000_000 // n))
    done = 0
    gen = rng.generator
    while done < n_perm:
        m = min(chunk, n_perm - done)
        shuffled = gen.permuted(np.broadcast_to(zy, (m, n)), axis=1)
        r = np.abs(shuffled @ zx) / n
        # tolerance guards against ties broken by summation order
        exceed += int(np.count_nonzero(r >= observed - 1e-12))
        done += m
    p = (1.0 + exceed) / (1.0 + n_perm)
    return TestReport(name, observed, p, n, alpha, rng.seed, rng.stream)


def z_test(estimate: float, expected: float, se: float, *, n: int, alpha: float = 0.01,
           name: str = "z", rng: RngStream | None = None) -> TestReport:
    """Two-sided normal test of ``estimate`` against ``expected`` with standard error ``se``.

    The statistic is the z-score, so ``|statistic| < 3`` reads as "within 3σ".
    """
    seed, stream = _provenance(rng)
    if se <= 0.0:
        ok = estimate == expected
        return TestReport(name, 0.0 if ok else math.inf, 1.0 if ok else 0.0, n, alpha, seed, stream,
                          note="degenerate: zero standard error")
    z = (estimate - expected) / se
    return TestReport(name, z, min(1.0, 2.0 * _sps.norm.sf(abs(z))), n, alpha, seed, stream)


def estimate_rate(ps: PointSet) -> float:
    """``N / log(hi/lo)``: unbiased rate estimate for a scale-invariant PPP."""
    length = ps.window.log_length
    if length == 0.0:
        raise ParameterError("zero-length window")
    if not math.isfinite(length):
        raise ParameterError("window must have lo > 0")
    return len(ps) / length


def ppp_ratio_test(ps_or_ratios, theta: float, *, anchor: float | None = None,
                   alpha: float = 0.01, name: str = "ppp-ratio",
                   rng: RngStream | None = None) -> TestReport:
    """KS test of consecutive point ratios against beta(θ, 1).

    Accepts a :class:`PointSet` (ratios taken from the window's lower end, or
    from ``anchor``) or an array of ratios already in (0, 1).
    """
    if isinstance(ps_or_ratios, PointSet):
        ratios = forward_ratios(ps_or_ratios, anchor)
    else:
        ratios = np.asarray(ps_or_ratios, dtype=np.float64)
    return ks_test(ratios, BetaTheta1(theta).cdf, alpha=alpha, name=name, rng=rng)


def bonferroni_alpha(alpha: float, m: int) -> float:
    """Per-test level keeping the family-wise error at ``alpha`` over ``m`` tests."""
    return alpha / max(1, int(m))


def binomial_band(n: int, p: float, level: float = 0.99) -> tuple[int, int]:
    """Equal-tailed ``level`` interval for a Binomial(n, p) count."""
    tail = (1.0 - level) / 2.0
    return int(_sps.binom.ppf(tail, n, p)), int(_sps.binom.isf(tail, n, p))
