"""Hold-jump engine for non-decreasing, driftless, finite-rate 1-self-similar additive processes.

Such a process is fixed by a rate θ and a positive generic jump ``J``. Its key
function is ``k(x) = θ P(J > x)``. Jump times form a scale-invariant PPP of rate
θ, and a jump at time ``s`` has size ``s·J``. From any time ``s`` the process
holds until ``s/β``, with ``β ~ beta(θ, 1)``, and then jumps by ``(s/β)·J``.

Paths are kept in log coordinates (``log S``, ``log T``). A segment of ``n``
jumps spans roughly ``n/θ`` units of log-time, far outside the double range
for the path lengths used in testing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate

from .distributions import DistSpec, ParameterError, RngStream
from .kernels import accumulate_log_levels
from .pointproc import PointSet, Window
from .stats import TestReport

__all__ = [
    "InfiniteRateError",
    "JumpTail",
    "KeyFunction",
    "SsaPath",
    "LevelCrossing",
    "JumpField",
    "parse_jump",
    "rate_of",
    "validate_log_moment",
    "hold_jump_step",
    "seed_at_level_crossing",
    "simulate_above_level",
    "range_of",
    "jump_times_of",
    "jump_sizes_of",
    "sizes_in_window",
    "intensity_projection_check",
    "simulate_two_parameter",
]


class InfiniteRateError(ParameterError):
    """The key function is unbounded at 0+, so jump times are dense."""


# -----------------------------------------------------------------------------
# jump laws given by a tail function
# -----------------------------------------------------------------------------


class JumpTail:
    """A jump law described by its tail ``P(J > x)``.

    ``JumpTail.tabulated(xs, tail)`` builds a right-continuous step tail:
    ``P(J > x) = tail[i]`` on ``[xs[i], xs[i+1])``. Step tails are sampled
    exactly by inverse transform. A plain callable tail is also accepted; it is
    sampled by bisection on the tail and supports the log-moment check.
    """

    def __init__(self, tail: Callable, *, breakpoints=None, values=None, label: str = "tail"):
        self._tail = tail
        self._xs = breakpoints
        self._ps = values
        self.label = label

    @classmethod
    def tabulated(cls, breakpoints, values) -> "JumpTail":
        xs = np.asarray(breakpoints, dtype=np.float64)
        ps = np.asarray(values, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ps.shape or xs.size < 1:
            raise ParameterError("breakpoints and values must be equal-length 1-d arrays")
        if xs[0] != 0.0 or np.any(np.diff(xs) <= 0):
            raise ParameterError("breakpoints must start at 0 and increase strictly")
        if np.any(np.diff(ps) > 0) or ps[0] > 1.0 or ps[-1] < 0.0:
            raise ParameterError("tail values must be non-increasing within [0, 1]")

        def tail(x):
            x = np.asarray(x, dtype=np.float64)
            i = np.searchsorted(xs, x, side="right") - 1
            return np.where(x < 0, 1.0, ps[np.clip(i, 0, None)])

        return cls(tail, breakpoints=xs, values=ps, label="tabulated")

    @property
    def is_tabulated(self) -> bool:
        return self._xs is not None

    def sf(self, x):
        return np.asarray(self._tail(np.asarray(x, dtype=np.float64)), dtype=np.float64)

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def isf(self, q, *, hi: float = 1e300):
        """Smallest ``x`` with ``P(J > x) < q`` (generalised upper quantile)."""
        q = np.asarray(q, dtype=np.float64)
        if self.is_tabulated:
            # first breakpoint whose tail value drops below q
            below = self._ps[None, :] < q.reshape(-1, 1)
            idx = np.where(below.any(axis=1), below.argmax(axis=1), -1)
            out = np.where(idx >= 0, self._xs[np.maximum(idx, 0)], np.inf)
            return out.reshape(q.shape)
        lo_log = np.full(q.shape, -745.0)
        hi_log = np.full(q.shape, math.log(hi))
        for _ in range(200):
            mid = 0.5 * (lo_log + hi_log)
            go_up = self.sf(np.exp(mid)) >= q
            lo_log = np.where(go_up, mid, lo_log)
            hi_log = np.where(go_up, hi_log, mid)
        return np.exp(hi_log)

    def ppf(self, q):
        return self.isf(1.0 - np.asarray(q, dtype=np.float64))

    def sample(self, rng: RngStream, size=None):
        u = rng.uniform(size)
        out = self.isf(u)
        return float(out) if size is None else out

    def truncated_mean(self, cap: float) -> float:
        """``E[min(J, cap)] = ∫_0^cap P(J > x) dx``."""
        if self.is_tabulated:
            xs = np.append(self._xs, np.inf)
            lo = np.minimum(xs[:-1], cap)
            hi = np.minimum(xs[1:], cap)
            width = hi - lo
            return float(np.sum(np.where(self._ps > 0, self._ps * np.where(self._ps > 0, width, 0.0), 0.0)))
        return _tail_integral(lambda x: float(self.sf(x)), 0.0, cap)

    @property
    def mean(self) -> float:
        if self.is_tabulated:
            return math.inf if self._ps[-1] > 0 else self.truncated_mean(math.inf)
        return self.truncated_mean(math.inf)

    def __str__(self):
        if self.is_tabulated:
            pairs = ";".join(f"{x!r}:{p!r}" for x, p in zip(self._xs.tolist(), self._ps.tolist()))
            return f"tab:{pairs}"
        return self.label


def _tail_integral(f, a, b):
    if b == math.inf:
        val, _ = integrate.quad(f, a, 1.0 if a < 1.0 else a + 1.0, limit=200)
        tail, _ = integrate.quad(f, max(a, 1.0) if a < 1.0 else a + 1.0, math.inf, limit=200)
        return val + tail
    val, _ = integrate.quad(f, a, b, limit=200)
    return val


JumpLaw = Union[DistSpec, JumpTail]


def parse_jump(text: str) -> JumpLaw:
    """Parse a jump law: a distribution text form, or ``tab:x0:p0;x1:p1;...`` for a step tail."""
    text = text.strip()
    if text.lower().startswith("tab:"):
        try:
            pairs = [item.split(":") for item in text[4:].split(";") if item]
            xs = [float(x) for x, _ in pairs]
            ps = [float(p) for _, p in pairs]
        except ValueError as exc:
            raise ParameterError(f"cannot parse tabulated tail {text!r}") from exc
        return JumpTail.tabulated(xs, ps)
    return DistSpec.parse(text)


# -----------------------------------------------------------------------------
# key function
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class KeyFunction:
    """The key function ``k(x) = θ P(J > x)`` of a finite-rate process."""

    theta: float
    jump: JumpLaw

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ParameterError("rate theta must be positive and finite")
        if isinstance(self.jump, DistSpec) and not self.jump.is_positive:
            raise ParameterError("generic jump must be positive")

    @classmethod
    def gamma(cls, theta: float, lam: float = 1.0) -> "KeyFunction":
        """Key ``θ e^(-λx)``: the process with ``T(1) ~ gamma(θ, λ)``."""
        return cls(theta, DistSpec("exp", (lam,)))

    @classmethod
    def concave_majorant(cls) -> "KeyFunction":
        """Key of the vertex-time process of the concave majorant of Brownian motion."""
        return cls(0.5, DistSpec("gamma", (0.5, 0.5)))

    @classmethod
    def from_key(cls, k: Callable, *, label: str = "key") -> "KeyFunction":
        """Build from a key function; the rate is ``k(0+)``."""
        xs = 10.0 ** -np.arange(1, 301, dtype=np.float64)
        vals = np.array([float(k(x)) for x in xs])
        if not np.all(np.isfinite(vals)):
            raise InfiniteRateError("key function is unbounded at 0+")
        head, tail = vals[-20:], vals[-1]
        if tail <= 0:
            raise ParameterError("key function must be positive near 0")
        if np.max(head) - np.min(head) > 1e-9 * tail or vals[-1] > 1e12 * max(vals[0], 1e-300):
            raise InfiniteRateError("key function has no finite limit at 0+")
        theta = float(tail)
        return cls(theta, JumpTail(lambda x: np.vectorize(lambda v: float(k(v)))(x) / theta, label=label))

    def k(self, x):
        """Evaluate the key function."""
        return self.theta * self.jump.sf(x)

    @property
    def is_gamma(self) -> bool:
        j = self.jump
        return isinstance(j, DistSpec) and (j.kind == "exp" or (j.kind == "gamma" and j.params[0] == 1.0))

    @property
    def gamma_rate(self) -> float:
        j = self.jump
        return j.params[0] if j.kind == "exp" else j.params[1]

    def sample_jumps(self, rng: RngStream, size: int) -> np.ndarray:
        return np.asarray(self.jump.sample(rng, size), dtype=np.float64)

    def truncated_jump_mean(self, cap: float) -> float:
        j = self.jump
        if isinstance(j, JumpTail):
            return j.truncated_mean(cap)
        if j.kind == "point":
            return min(j.params[0], cap)
        if math.isinf(cap):
            return j.mean
        return _tail_integral(lambda x: float(j.sf(x)), 0.0, cap)

    def __str__(self):
        return f"theta={self.theta!r} jump={self.jump}"


def rate_of(key: KeyFunction) -> float:
    """``k(0+)``, the rate of the jump-time process."""
    if isinstance(key.jump, JumpTail):
        p0 = float(key.jump.sf(np.array(0.0)))
        return key.theta * p0
    return key.theta


def validate_log_moment(key: KeyFunction) -> bool:
    """Whether ``E[log⁺ J]`` is finite.

    Every parametric law here passes. A tail function is checked numerically:
    ``∫_1^∞ P(J > x) dx/x = ∫_0^∞ P(J > e^u) du`` is integrated over doubling
    blocks ``[2^j, 2^(j+1)]`` up to ``u = 512``. The integral is called divergent
    when the last block still adds a non-negligible amount and the block
    contributions are not shrinking.
    """
    j = key.jump
    if isinstance(j, DistSpec):
        return True
    if j.is_tabulated:
        return bool(j._ps[-1] == 0.0)

    def g(u):
        return float(j.sf(np.array(math.exp(u))))

    edges = [0.0] + [2.0 ** i for i in range(0, 10)]
    blocks = [integrate.quad(g, a, b, limit=200)[0] for a, b in zip(edges[:-1], edges[1:])]
    last, prev = blocks[-1], blocks[-2]
    if last < 1e-6:
        return True
    return not (prev > 0 and last / prev > 0.95)


# -----------------------------------------------------------------------------
# paths
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelCrossing:
    """The jump over ``level``: made at time ``S`` from ``G <= level`` to ``D > level``."""

    level: float
    S: float
    G: float
    D: float
    exact: bool = True

    def __post_init__(self):
        if not (self.G <= self.level < self.D):
            raise ValueError("crossing must satisfy G <= level < D")


@dataclass(frozen=True, eq=False)
class SsaPath:
    """A staircase path segment ``(S_1, T_1), ..., (S_n, T_n)`` with start value ``T_0``.

    Stored as logs. ``log_jumps[i] = log(T_{i+1} - T_i)`` is kept separately so
    jump sizes never need to be recovered by cancellation.
    """

    log_s: np.ndarray
    log_t: np.ndarray
    log_jumps: np.ndarray
    log_t0: float
    origin: str = ""
    exact: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("log_s", "log_t", "log_jumps"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.log_s.size == self.log_t.size == self.log_jumps.size):
            raise ValueError("path arrays must have equal length")
        if self.log_s.size:
            if np.any(np.diff(self.log_s) <= 0):
                raise ValueError("jump times must increase strictly")
            if np.any(np.diff(np.concatenate(([self.log_t0], self.log_t))) <= 0):
                raise ValueError("path values must increase strictly")

    @classmethod
    def from_values(cls, S, T, T0: float, **kw) -> "SsaPath":
        S = np.asarray(S, dtype=np.float64)
        T = np.asarray(T, dtype=np.float64)
        jumps = np.diff(np.concatenate(([T0], T)))
        with np.errstate(divide="ignore"):
            return cls(np.log(S), np.log(T), np.log(jumps), float(np.log(T0)), **kw)

    def __len__(self):
        return int(self.log_s.size)

    @property
    def S(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_s)

    @property
    def T(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_t)

    @property
    def T0(self) -> float:
        return float(np.exp(self.log_t0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        header = ", ".join(f"{k}={v}" for k, v in self.meta.items())
        buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "S", "T", "log_S", "log_T"])
        w.writerow([0, "", repr(self.T0), "", repr(self.log_t0)])
        for i, (ls, lt) in enumerate(zip(self.log_s.tolist(), self.log_t.tolist()), start=1):
            with np.errstate(over="ignore"):
                w.writerow([i, repr(float(np.exp(ls))), repr(float(np.exp(lt))), repr(ls), repr(lt)])
        return buf.getvalue()


def _log_beta(theta, rng, size):
    return np.log(rng.uniform(size)) / theta


def hold_jump_step(s: float, t: float, key: KeyFunction, rng: RngStream):
    """One hold-jump move from time ``s`` at level ``t``: return ``(s', t')``.

    Hold until ``s' = s/β`` with ``β ~ beta(θ, 1)``, then jump by ``s'·J``.
    """
    if not s > 0 or t < 0:
        raise ParameterError("need s > 0 and t >= 0")
    beta = rng.uniform() ** (1.0 / key.theta)
    s_new = s / beta
    j = float(key.sample_jumps(rng, 1)[0])
    return s_new, t + s_new * j


def _extend(log_s0, log_t0, key, rng, n_steps):
    """Run ``n_steps`` hold-jump moves from ``(e^log_s0, e^log_t0)`` in log space."""
    log_s = log_s0 - np.cumsum(_log_beta(key.theta, rng, n_steps))
    with np.errstate(divide="ignore"):
        log_jumps = log_s + np.log(key.sample_jumps(rng, n_steps))
    log_t = accumulate_log_levels(log_t0, log_jumps)
    return log_s, log_t, log_jumps


def _start_time(level: float, key: KeyFunction, tol: float) -> float:
    mean = key.truncated_jump_mean(math.inf)
    if math.isfinite(mean) and mean > 0:
        return tol * level / (key.theta * mean)
    s0 = tol * level / key.theta
    while key.theta * s0 * key.truncated_jump_mean(level / s0) > tol * level:
        s0 *= 0.5
    return s0


def seed_at_level_crossing(level: float, key: KeyFunction, rng: RngStream, tol: float = 1e-3,
                           method: str = "auto"):
    """Sample the jump over ``level``; return ``(LevelCrossing, SsaPath)``.

    Gamma keys (exponential jumps) use the exact law: ``G/level ~ beta(θ, 1)``
    independent of ``1/S ~ gamma(θ, 1)/(λ level)``, with ``D = level + S ε/λ``.
    Other keys run the hold-jump chain forward from ``(s0, 0)`` where
    ``θ s0 E[min(J, level/s0)] <= tol·level``. That makes the neglected mass
    below ``s0`` a ``tol`` fraction of the level on average.
    """
    if not level > 0:
        raise ParameterError("level must be positive")
    if not 0 < tol < 1:
        raise ParameterError("tol must lie in (0, 1)")
    if method not in ("auto", "exact", "forward"):
        raise ParameterError(f"unknown method {method!r}")
    use_exact = key.is_gamma if method == "auto" else method == "exact"
    if use_exact and not key.is_gamma:
        raise ParameterError("exact crossing law is only available for gamma keys")

    if use_exact:
        lam = key.gamma_rate
        gam = float(rng.gamma(key.theta))
        g_frac = float(rng.uniform()) ** (1.0 / key.theta)
        eps = float(rng.exponential())
        s1 = lam * level / gam
        G = level * g_frac
        overshoot = eps / gam
        log_s = math.log(s1)
        log_t0 = math.log(G)
        log_d = math.log(level) + math.log1p(overshoot)
        log_jump = math.log(level) + math.log(1.0 - g_frac + overshoot)
        crossing = LevelCrossing(level, s1, G, level * (1.0 + overshoot), exact=True)
        path = SsaPath([log_s], [log_d], [log_jump], log_t0, origin="exact crossing law", exact=True)
        return crossing, path

    log_level = math.log(level)
    s0 = _start_time(level, key, tol)
    log_s, log_t = math.log(s0), -math.inf
    block = max(16, int(4 * key.theta * math.log(level / s0 + math.e)))
    while True:
        ls, lt, lj = _extend(log_s, log_t, key, rng, block)
        hit = np.flatnonzero(lt > log_level)
        if hit.size:
            i = int(hit[0])
            prev = lt[i - 1] if i > 0 else log_t
            G = math.exp(prev) if prev > -math.inf else 0.0
            crossing = LevelCrossing(level, math.exp(ls[i]), G, math.exp(lt[i]), exact=False)
            path = SsaPath([ls[i]], [lt[i]], [lj[i]], float(prev),
                           origin=f"forward from s0={s0:.6g}", exact=False)
            return crossing, path
        log_s, log_t = float(ls[-1]), float(lt[-1])


def simulate_above_level(level: float, n_jumps: int, key: KeyFunction, rng: RngStream,
                         tol: float = 1e-3, method: str = "auto") -> SsaPath:
    """Seed at the crossing of ``level`` and continue for ``n_jumps`` jumps in total."""
    if n_jumps < 1:
        raise ParameterError("n_jumps must be at least 1")
    crossing, seed = seed_at_level_crossing(level, key, rng, tol, method)
    log_s = seed.log_s
    log_t = seed.log_t
    log_j = seed.log_jumps
    if n_jumps > 1:
        ls, lt, lj = _extend(float(log_s[0]), float(log_t[0]), key, rng, n_jumps - 1)
        log_s = np.concatenate((log_s, ls))
        log_t = np.concatenate((log_t, lt))
        log_j = np.concatenate((log_j, lj))
    meta = {"theta": key.theta, "jump": str(key.jump), "seed": rng.seed,
            "stream": rng.stream, "level": level}
    return SsaPath(log_s, log_t, log_j, seed.log_t0, origin=seed.origin, exact=seed.exact, meta=meta)


def range_of(path: SsaPath) -> PointSet:
    """The values ``T_1 < ... < T_n`` on the window ``(T_0, T_n]`` (log mode)."""
    if len(path) == 0:
        return PointSet.from_logs([], Window.from_logs(path.log_t0, path.log_t0))
    return PointSet.from_logs(path.log_t, Window.from_logs(path.log_t0, path.log_t[-1]))


def jump_times_of(path: SsaPath) -> PointSet:
    """Jump times ``S_1 < ... < S_n`` on ``(S_1, S_n]``, with ``S_1`` on the closed end."""
    if len(path) == 0:
        return PointSet.from_logs([], Window.from_logs(0.0, 0.0))
    return PointSet.from_logs(path.log_s, Window.from_logs(path.log_s[0], path.log_s[-1]))


def jump_sizes_of(path: SsaPath) -> PointSet:
    """Sorted jump sizes ``T_i - T_{i-1}``, including the first jump ``D - G``."""
    if len(path) == 0:
        return PointSet.from_logs([], Window.from_logs(-math.inf, -math.inf))
    lo, hi = path.log_t0, float(path.log_t[-1])
    width = hi + math.log(-math.expm1(lo - hi)) if lo > -math.inf else hi
    return PointSet.from_logs(np.sort(path.log_jumps), Window.from_logs(-math.inf, width))


def _late_miss_quantile(key: KeyFunction, miss_tol: float) -> float:
    """The ``u`` with ``θ ∫_0^u P(J <= v) dv/v = miss_tol``.

    Once the path time passes ``b/u``, the expected number of later jumps with
    size at most ``b`` is below ``miss_tol``.
    """
    theta = key.theta

    def mass(log_u):
        u = math.exp(log_u)
        return theta * integrate.quad(lambda v: float(1.0 - key.jump.sf(v)) / v if v > 0 else 0.0,
                                      0.0, u, limit=200, points=[u * 1e-6, u * 1e-3])[0]

    lo, hi = -700.0, 50.0
    if mass(hi) <= miss_tol:
        return math.exp(hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mass(mid) > miss_tol:
            hi = mid
        else:
            lo = mid
    return math.exp(lo)


def sizes_in_window(key: KeyFunction, level: float, log_hi: float, rng: RngStream, *,
                    tol: float = 1e-3, miss_tol: float = 1e-9, method: str = "auto"):
    """All jump sizes in ``(level, e^log_hi]``; return ``(PointSet, SsaPath)``.

    Every jump before the crossing of ``level`` is at most ``level``, so sizes
    above ``level`` can only come after the seed. The path is run until later
    jumps are expected to add fewer than ``miss_tol`` sizes to the window.
    The result is the size process restricted to a fixed window, not just the
    sizes of a fixed number of jumps.
    """
    log_level = math.log(level)
    if not log_hi > log_level:
        raise ParameterError("window must satisfy level < e^log_hi")
    log_stop = log_hi - math.log(_late_miss_quantile(key, miss_tol))
    crossing, seed = seed_at_level_crossing(level, key, rng, tol, method)
    parts = [(seed.log_s, seed.log_t, seed.log_jumps)]
    log_s, log_t = float(seed.log_s[0]), float(seed.log_t[0])
    block = max(64, int(key.theta * (log_stop - log_s) * 1.1) + 64)
    while log_s <= log_stop:
        ls, lt, lj = _extend(log_s, log_t, key, rng, block)
        parts.append((ls, lt, lj))
        log_s, log_t = float(ls[-1]), float(lt[-1])
        block = max(64, block // 4)
    log_s_all = np.concatenate([p[0] for p in parts])
    log_t_all = np.concatenate([p[1] for p in parts])
    log_j_all = np.concatenate([p[2] for p in parts])
    meta = {"theta": key.theta, "jump": str(key.jump), "seed": rng.seed,
            "stream": rng.stream, "level": level}
    path = SsaPath(log_s_all, log_t_all, log_j_all, seed.log_t0, origin=seed.origin,
                   exact=seed.exact, meta=meta)
    inside = np.sort(log_j_all[(log_j_all > log_level) & (log_j_all <= log_hi)])
    return PointSet.from_logs(inside, Window.from_logs(log_level, log_hi)), path


# -----------------------------------------------------------------------------
# the jump field
# -----------------------------------------------------------------------------


def _time_cutoffs(key: KeyFunction, a: float, b_lo: float, b_hi: float, tol: float):
    """Times outside which atoms ``(s, sJ)`` land in ``(b_lo, b_hi]`` with mean count < tol."""
    theta = key.theta

    def early_mass(s_lo):
        # θ ∫_{b_lo/s_lo}^∞ P(J > u) du/u
        u0 = b_lo / s_lo
        return theta * _tail_integral(lambda u: float(key.jump.sf(u)) / u, u0, math.inf)

    s_lo = min(a, b_hi) if math.isfinite(a) else b_hi
    while early_mass(s_lo) > tol and s_lo > 1e-300:
        s_lo *= 0.5
    if math.isfinite(a):
        return s_lo, a

    def late_mass(s_hi):
        # θ ∫_0^{b_hi/s_hi} P(J <= u) du/u
        u1 = b_hi / s_hi
        return theta * integrate.quad(lambda u: float(1.0 - key.jump.sf(u)) / u if u > 0 else 0.0,
                                      0.0, u1, limit=200)[0]

    s_hi = max(b_hi, s_lo * 2.0)
    while late_mass(s_hi) > tol:
        s_hi *= 2.0
    return s_lo, s_hi


def intensity_projection_check(key: KeyFunction, a: float, n_samples: int, rng: RngStream, *,
                               window: tuple = (1.0, 2.0), n_bins: int = 8,
                               alpha: float = 0.01) -> TestReport:
    """Chi-square check of the size-coordinate intensity of the jump field.

    Atoms ``(s, s·J)`` with ``s`` in ``(0, a]`` are simulated for ``n_samples``
    independent replicate fields. Their sizes in ``window`` are binned and
    compared with the expected counts ``n_samples ∫ θ P(J > x/a) dx/x`` per bin.
    ``a = inf`` gives the global size process, expected ``θ dx/x``.
    """
    if not a > 0:
        raise ParameterError("a must be positive")
    b_lo, b_hi = map(float, window)
    if not 0 < b_lo < b_hi:
        raise ParameterError("test window must satisfy 0 < lo < hi")
    theta = key.theta
    edges = b_lo * (b_hi / b_lo) ** (np.arange(n_bins + 1) / n_bins)

    def density(x):
        tail = 1.0 if math.isinf(a) else float(key.jump.sf(x / a))
        return theta * tail / x

    expected = np.array([n_samples * integrate.quad(density, lo, hi, limit=200)[0]
                         for lo, hi in zip(edges[:-1], edges[1:])])

    s_lo, s_hi = _time_cutoffs(key, a, b_lo, b_hi, 1e-6 / max(n_samples, 1))
    n_atoms = int(rng.poisson(n_samples * theta * math.log(s_hi / s_lo)))
    log_s = math.log(s_lo) + math.log(s_hi / s_lo) * rng.uniform(n_atoms)
    sizes = np.exp(log_s) * key.sample_jumps(rng, n_atoms)
    inside = sizes[(sizes > b_lo) & (sizes <= b_hi)]
    observed = np.bincount(np.clip(np.searchsorted(edges, inside, side="left") - 1, 0, n_bins - 1),
                           minlength=n_bins)

    live = expected > 1e-12
    if np.any(observed[~live] > 0):
        return TestReport("intensity-projection", math.inf, 0.0, int(observed.sum()), alpha,
                          rng.seed, rng.stream, note="atoms where zero intensity expected")
    if not live.any():
        return TestReport("intensity-projection", 0.0, 1.0, 0, alpha, rng.seed, rng.stream,
                          note="test window outside the support of the sizes")
    from scipy.stats import chi2

    stat = float(np.sum((observed[live] - expected[live]) ** 2 / expected[live]))
    # Poisson counts with known means: no degree of freedom is lost
    p = float(chi2.sf(stat, int(live.sum())))
    return TestReport("intensity-projection", stat, p, int(observed.sum()), alpha, rng.seed, rng.stream)


@dataclass(frozen=True, eq=False)
class JumpField:
    """Atoms ``(s, w, x)`` of the two-parameter jump field on a time window."""

    s: np.ndarray
    w: np.ndarray
    x: np.ndarray
    s_window: Window
    w_max: float

    def __post_init__(self):
        for name in ("s", "w", "x"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return int(self.s.size)

    def value(self, s, w):
        """``T(s, w)``: total size of atoms with time ``<= s`` and second coordinate ``<= w``."""
        s = np.asarray(s, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        sb, wb = np.broadcast_arrays(s, w)
        mask = (self.s[None, :] <= sb.reshape(-1, 1)) & (self.w[None, :] <= wb.reshape(-1, 1))
        out = (mask * self.x[None, :]).sum(axis=1).reshape(sb.shape)
        return out[()] if out.ndim == 0 else out

    def jump_count(self, w: float) -> int:
        return int(np.count_nonzero(self.w <= w))

    def slab(self, v: float, u: float) -> "JumpField":
        """Atoms with ``w`` in ``(v, u]``, shifted so the slab starts at 0."""
        keep = (self.w > v) & (self.w <= u)
        return JumpField(self.s[keep], self.w[keep] - v, self.x[keep], self.s_window, u - v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "w", "x"])
        w.writerows([repr(a), repr(b), repr(c)] for a, b, c in
                    zip(self.s.tolist(), self.w.tolist(), self.x.tolist()))
        return buf.getvalue()


def simulate_two_parameter(key: KeyFunction, s_window: Window, w_max: float,
                           rng: RngStream) -> JumpField:
    """Sample the Poisson field with intensity ``θ ds/s · P(sJ ∈ dx) · dw``.

    Restricted to ``s`` in ``s_window`` and ``w`` in ``(0, w_max]``. The atom
    count is Poisson(θ w_max log(hi/lo)).
    """
    if w_max < 0:
        raise ParameterError("w_max must be non-negative")
    length = s_window.log_length
    if not math.isfinite(length):
        raise ParameterError("s_window must have lo > 0")
    mean = key.theta * w_max * length
    n = int(rng.poisson(mean)) if mean > 0 else 0
    log_s = s_window.log_lo + length * rng.uniform(n)
    s = np.exp(log_s)
    w = w_max * rng.uniform(n)
    x = s * key.sample_jumps(rng, n)
    order = np.argsort(s)
    return JumpField(s[order], w[order], x[order], s_window, float(w_max))
