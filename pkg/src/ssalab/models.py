"""Concrete constructions built on the hold-jump engine.

* gamma recursions for the path after the jump over 1;
* the stochastic-difference-equation (perpetuity) series;
* corner sets of the time-inverted gamma path and their joint density;
* vertex times of the concave majorant of Brownian motion;
* extremal processes, simulated through their rate function;
* inhomogeneous record sequences with independent record indicators.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .distributions import DistSpec, ParameterError, RngStream
from .kernels import accumulate_log_levels, upper_hull
from .pointproc import PointSet, Window
from .ssa import KeyFunction, simulate_above_level

__all__ = [
    "GammaChain",
    "gamma_chain",
    "series_representation_sample",
    "CornerSet",
    "corner_set",
    "corner_density",
    "log_corner_density",
    "brownian_grid",
    "majorant_faces",
    "concave_majorant_vertices",
    "ExtremalSpec",
    "ExtremalPath",
    "extremal_process",
    "RecordSequence",
    "inhomogeneous_records",
]


def _check_theta(theta):
    if not (theta > 0 and math.isfinite(theta)):
        raise ParameterError("theta must be positive and finite")


def _csv(header, rows, comment=None):
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([repr(float(v)) if not isinstance(v, (int, np.integer)) else int(v) for v in row]
                for row in rows)
    return buf.getvalue()


# -----------------------------------------------------------------------------
# gamma recursions
# -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GammaChain:
    """Times ``S_1..S_n`` and values ``T_0 = 1 < T_1 < ... < T_n``, stored as logs.

    Arrays are 1-d for one chain or 2-d ``(replicates, n)`` for many.
    """

    theta: float
    lam: float
    log_S: np.ndarray
    log_T: np.ndarray  # includes log T_0 = 0 in column 0

    @property
    def S(self):
        return np.exp(self.log_S)

    @property
    def T(self):
        return np.exp(self.log_T)

    def t_ratios(self):
        """``T_{i-1}/T_i`` for ``i = 1..n``."""
        return np.exp(-np.diff(self.log_T, axis=-1))

    def last_ratio(self):
        """``T_n/S_n`` on the scale where the key is ``θ e^(-x)``."""
        return np.exp(self.log_T[..., -1] - self.log_S[..., -1] + math.log(self.lam))

    def to_csv(self) -> str:
        if self.log_S.ndim != 1:
            raise ValueError("CSV export is for a single chain")
        rows = [(0, "", 1.0)] + [(i + 1, s, t) for i, (s, t) in
                                 enumerate(zip(self.S.tolist(), self.T[1:].tolist()))]
        buf = io.StringIO()
        buf.write(f"# theta={self.theta!r}, lambda={self.lam!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "S", "T"])
        w.writerows(rows)
        return buf.getvalue()


def gamma_chain(theta: float, n: int, rng: RngStream, *, lam: float = 1.0,
                replicates: int | None = None) -> GammaChain:
    """Gamma recursions after the jump over 1.

    ``S_1 = λ/γ``, ``S_{k+1} = S_k/β_k`` and ``T_k = T_{k-1} + S_k ε_k/λ`` with
    ``T_0 = 1``, from independent ``γ ~ gamma(θ, 1)``, ``β ~ beta(θ, 1)`` and
    ``ε ~ exp(1)``. The values ``T`` do not depend on ``λ``.
    """
    _check_theta(theta)
    if n < 1:
        raise ParameterError("n must be at least 1")
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    r = 1 if replicates is None else int(replicates)
    gam = rng.gamma(theta, r)
    log_beta = np.log(rng.uniform((r, n - 1))) / theta
    eps = rng.exponential((r, n))
    log_S = np.empty((r, n))
    log_S[:, 0] = math.log(lam) - np.log(gam)
    log_S[:, 1:] = log_S[:, :1] - np.cumsum(log_beta, axis=1)
    # T_k/T_{k-1} = 1 + (S_k/T_{k-1}) ε_k / λ, accumulated in logs
    log_T = np.zeros((r, n + 1))
    for k in range(n):
        log_T[:, k + 1] = log_T[:, k] + np.log1p(
            np.exp(log_S[:, k] - log_T[:, k] - math.log(lam)) * eps[:, k])
    if replicates is None:
        log_S, log_T = log_S[0], log_T[0]
    return GammaChain(float(theta), float(lam), log_S, log_T)


# -----------------------------------------------------------------------------
# series representation
# -----------------------------------------------------------------------------

_SERIES_BLOCK = 64
_SERIES_CAP = 1_000_000


def series_representation_sample(theta: float, jump, trunc_eps: float, rng: RngStream,
                                 size: int | None = None):
    """``X = Σ_n (β_1 ⋯ β_n) J_n``, summed while the running product is ``>= trunc_eps``.

    ``X`` solves ``X = β (J + X)`` in law; for ``J ~ exp(λ)`` it is gamma(θ, λ).
    Terms are drawn in fixed blocks of columns for all samples at once, so the
    draws do not depend on ``trunc_eps``. Halving ``trunc_eps`` under the same
    stream only appends terms. The neglected tail has mean at most
    ``trunc_eps (θ + 1) E[J]``.
    """
    _check_theta(theta)
    if not 0 < trunc_eps < 1:
        raise ParameterError("trunc_eps must lie in (0, 1)")
    m = 1 if size is None else int(size)
    if isinstance(jump, DistSpec) and jump.kind == "point" and jump.params[0] == 0.0:
        return 0.0 if size is None else np.zeros(m)
    log_eps = math.log(trunc_eps)
    total = np.zeros(m)
    log_prod = np.zeros(m)
    used = 0
    while used < _SERIES_CAP:
        log_b = np.log(rng.uniform((m, _SERIES_BLOCK))) / theta
        j = np.asarray(jump.sample(rng, (m, _SERIES_BLOCK)), dtype=np.float64)
        lp = log_prod[:, None] + np.cumsum(log_b, axis=1)
        keep = lp >= log_eps
        total += np.sum(np.where(keep, np.exp(lp) * j, 0.0), axis=1)
        log_prod = lp[:, -1]
        used += _SERIES_BLOCK
        if np.all(log_prod < log_eps):
            break
    return float(total[0]) if size is None else total


# -----------------------------------------------------------------------------
# corners of the time-inverted gamma path
# -----------------------------------------------------------------------------


class CornerSet:
    """Consecutive corners ``(s_i, t_i)``, ``s`` strictly decreasing and ``t`` strictly increasing.

    Coordinates are stored as logs; long corner sets leave the double range.
    """

    __slots__ = ("log_s", "log_t")

    def __init__(self, log_s, log_t):
        log_s = np.array(log_s, dtype=np.float64).reshape(-1)
        log_t = np.array(log_t, dtype=np.float64).reshape(-1)
        if log_s.shape != log_t.shape:
            raise ValueError("s and t must have equal length")
        if np.any(np.diff(log_s) >= 0) or np.any(np.diff(log_t) <= 0):
            raise ValueError("corners need s strictly decreasing and t strictly increasing")
        if not np.all(np.isfinite(log_s)) or not np.all(np.isfinite(log_t)):
            raise ValueError("corner coordinates must be positive and finite")
        log_s.setflags(write=False)
        log_t.setflags(write=False)
        self.log_s, self.log_t = log_s, log_t

    @classmethod
    def from_values(cls, s, t) -> "CornerSet":
        return cls(np.log(np.asarray(s, dtype=np.float64)), np.log(np.asarray(t, dtype=np.float64)))

    def __len__(self):
        return int(self.log_s.size)

    @property
    def s(self):
        return np.exp(self.log_s)

    @property
    def t(self):
        return np.exp(self.log_t)

    @property
    def corners(self):
        return np.column_stack((self.s, self.t))

    def pi_s(self) -> PointSet:
        lp = self.log_s[::-1]
        return PointSet.from_logs(lp, Window.from_logs(lp[0], lp[-1]))

    def pi_t(self) -> PointSet:
        return PointSet.from_logs(self.log_t, Window.from_logs(self.log_t[0], self.log_t[-1]))

    def log_spacings(self):
        """``A_i = log(s_i/s_{i+1})`` and ``B_i = log(t_{i+1}/t_i)``, ``i = 1..N-1``."""
        return -np.diff(self.log_s), np.diff(self.log_t)

    def swapped(self) -> "CornerSet":
        """Reflection in the bisectrix: ``(s_1..s_N) <-> (t_N..t_1)``."""
        return CornerSet(self.log_t[::-1], self.log_s[::-1])

    def to_csv(self) -> str:
        return _csv(["s", "t"], zip(self.s.tolist(), self.t.tolist()))


def corner_set(theta: float, n_corners: int, rng: RngStream) -> CornerSet:
    """``n_corners`` consecutive corners of ``s -> T(1/s)`` for the gamma key ``θ e^(-x)``.

    The first corner sits on the flat that straddles level 1: ``(1/S_1, G)``.
    From there ``s_{i+1} = s_i β_i`` and ``t_{i+1} = t_i + J_i/s_i``, where
    the first increment is the exact jump over 1 and the rest use fresh
    exponential ``J``.
    """
    _check_theta(theta)
    if n_corners < 2:
        raise ParameterError("need at least 2 corners")
    path = simulate_above_level(1.0, n_corners, KeyFunction.gamma(theta), rng)
    log_s = -path.log_s
    log_t = np.concatenate(([path.log_t0], path.log_t[:-1]))
    return CornerSet(log_s, log_t)


def _corner_arrays(corners):
    if isinstance(corners, CornerSet):
        return corners.s, corners.t
    arr = np.asarray(corners, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
        raise ParameterError("corners must be an (N, 2) array of (s, t) pairs")
    return arr[:, 0], arr[:, 1]


def log_corner_density(theta: float, corners) -> float:
    """Log of the joint density of ``N`` consecutive corners.

    ``log p_N = N log θ - log Γ(θ) + (θ-1) log(t_1 s_N) - s_1 t_1 - Σ_{i<N} s_i (t_{i+1} - t_i)``.
    The exponent is summed exactly with ``math.fsum`` over the products
    ``s_i t_{i+1}`` and ``s_i t_i``. Those products are unchanged by the
    reflection ``s_i <-> t_{N+1-i}``, so the value is exactly invariant under it.
    """
    _check_theta(theta)
    s, t = _corner_arrays(corners)
    if np.any(s <= 0) or np.any(t <= 0) or not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
        raise ParameterError("corner coordinates must be positive")
    if np.any(np.diff(s) >= 0) or np.any(np.diff(t) <= 0):
        raise ParameterError("corners must have s strictly decreasing and t strictly increasing")
    n = s.size
    # -s_1 t_1 - Σ_{i<N} s_i t_{i+1} + Σ_{i<N} s_i t_i; the s_1 t_1 terms cancel
    neg = (s[:-1] * t[1:]).tolist()
    pos = (s[1:-1] * t[1:-1]).tolist() if n > 2 else []
    expo = math.fsum(pos + [-v for v in neg]) if n > 1 else -float(s[0] * t[0])
    return (n * math.log(theta) - special.gammaln(theta)
            + (theta - 1.0) * (math.log(t[0]) + math.log(s[-1])) + expo)


def corner_density(theta: float, corners) -> float:
    """Joint density ``p_N`` of ``N`` consecutive corners at the given configuration."""
    return math.exp(log_corner_density(theta, corners))


# -----------------------------------------------------------------------------
# concave majorant of Brownian motion
# -----------------------------------------------------------------------------


def brownian_grid(grid_n: int, time_window: Window, *, pad: float = 1e4,
                  per_doubling: int = 64) -> np.ndarray:
    """Time grid: a uniform stretch on ``(0, t_lo]``, then geometric up to ``t_hi``.

    ``[t_lo, t_hi]`` is the window widened by ``pad`` on both sides, shrunk when
    needed to keep at least ``per_doubling`` points per factor of 2.
    """
    if grid_n < 2 ** 10:
        raise ParameterError("grid_n must be at least 2**10")
    lo, hi = time_window.lo, time_window.hi
    if not 0 < lo < hi:
        raise ParameterError("time window must satisfy 0 < lo < hi")
    n_uniform = 256
    n_geo = grid_n - n_uniform
    window_doublings = math.log2(hi / lo)
    spare = n_geo / per_doubling - window_doublings
    if spare < 0:
        raise ParameterError("grid too coarse for the window")
    pad_doublings = min(math.log2(pad), spare / 2.0)
    t_lo = lo * 2.0 ** -pad_doublings
    t_hi = hi * 2.0 ** pad_doublings
    geo = np.geomspace(t_lo, t_hi, n_geo)
    uni = np.linspace(0.0, t_lo, n_uniform + 1)[:-1]
    return np.concatenate((uni, geo))


def majorant_faces(t, w, *, slope_rtol: float = 1e-9):
    """Vertices of the least concave majorant of the points ``(t_i, w_i)``.

    Returns ``(idx, slopes)``: the hull vertex indices with both endpoints, and
    the slopes of the faces between them. A hull point whose two adjacent
    faces differ in slope by at most ``slope_rtol`` (relative) is not counted
    as a vertex.
    """
    idx = upper_hull(t, w)
    t = np.asarray(t, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    while idx.size > 2:
        slopes = np.diff(w[idx]) / np.diff(t[idx])
        change = np.abs(np.diff(slopes))
        scale = np.maximum(np.abs(slopes[:-1]), np.abs(slopes[1:]))
        flat = change <= slope_rtol * scale
        if not flat.any():
            break
        keep = np.ones(idx.size, dtype=bool)
        keep[1:-1] = ~flat
        idx = idx[keep]
    slopes = np.diff(w[idx]) / np.diff(t[idx])
    return idx, slopes


def concave_majorant_vertices(grid_n: int, time_window: Window, rng: RngStream) -> PointSet:
    """Vertex times in ``time_window`` of the concave majorant of a Brownian path.

    The path is sampled exactly at the grid times of :func:`brownian_grid`. Its
    majorant agrees with that of the whole path on ``[0, ∞)`` between the first
    and last true vertices inside the padded grid. The padding makes it
    unlikely that no true vertex falls there.
    """
    grid = brownian_grid(grid_n, time_window)
    dt = np.diff(grid)
    w = np.concatenate(([0.0], np.cumsum(np.sqrt(dt) * rng.normal(dt.size))))
    idx, _ = majorant_faces(grid, w)
    times = grid[idx[1:-1]]
    inside = times[(times > time_window.lo) & (times <= time_window.hi)]
    return PointSet(inside, time_window)


# -----------------------------------------------------------------------------
# extremal processes
# -----------------------------------------------------------------------------


def _exponential_level(r):
    """``-log(1 - e^(-Q))`` at ``Q = e^r``, stable when ``Q`` underflows."""
    r = np.asarray(r, dtype=np.float64)
    q = np.exp(np.minimum(r, 700.0))
    with np.errstate(divide="ignore"):
        exact = -np.log(-np.expm1(-q))
    # log(1 - e^(-Q)) = log Q - Q/2 + Q²/24 + O(Q⁴)
    small = -r + q / 2.0 - q * q / 24.0
    return np.where(r < -20.0, small, exact)


@dataclass(frozen=True)
class ExtremalSpec:
    """A continuous cdf ``F`` through its rate ``Q = -log F``.

    The simulation runs on ``r = log Q(level)``, which decreases along the
    path. ``log_rate`` maps a level to ``r``. ``level`` and ``log_level`` map
    ``r`` back to a level.
    """

    name: str
    cdf: Callable
    log_rate: Callable
    level: Callable
    log_level: Callable | None = field(default=None, compare=False)

    @classmethod
    def gnedenko(cls) -> "ExtremalSpec":
        """``F(y) = exp(-1/y)``, ``Q(x) = 1/x``: the law of ``1/ε``."""
        return cls(
            "gnedenko",
            cdf=lambda y: np.where(np.asarray(y) > 0, np.exp(-1.0 / np.maximum(y, 1e-300)), 0.0),
            log_rate=lambda x: -np.log(x),
            level=lambda r: np.exp(-np.asarray(r)),
            log_level=lambda r: -np.asarray(r),
        )

    @classmethod
    def exponential(cls) -> "ExtremalSpec":
        """Standard exponential base law, ``F(y) = 1 - e^(-y)``."""
        return cls(
            "exponential",
            cdf=lambda y: -np.expm1(-np.maximum(y, 0.0)),
            log_rate=lambda x: np.log(-np.log1p(-np.exp(-np.asarray(x, dtype=np.float64)))),
            level=_exponential_level,
        )

    @classmethod
    def from_cdf(cls, name: str, cdf: Callable, ppf: Callable) -> "ExtremalSpec":
        """Any continuous, strictly increasing ``F`` with quantile function ``ppf``."""
        return cls(
            name,
            cdf=cdf,
            log_rate=lambda x: np.log(-np.log(cdf(np.asarray(x, dtype=np.float64)))),
            level=lambda r: ppf(np.exp(-np.exp(np.asarray(r)))),
        )

    def Q(self, x):
        return np.exp(self.log_rate(x))

    def levels_from(self, r):
        if self.log_level is not None:
            with np.errstate(over="ignore"):
                return np.exp(self.log_level(r))
        return self.level(r)


@dataclass(frozen=True, eq=False)
class ExtremalPath:
    """Jumps of an extremal process after ``start_time``.

    ``log_times[i]`` is the log of the ``i``-th jump time after the start, and
    ``log_rates[i]`` is ``log Q`` of the level entered there.
    ``log_prev_jump`` is the log of the last jump time before the start, if known.
    """

    spec: ExtremalSpec
    start_time: float
    start_log_rate: float
    log_times: np.ndarray
    log_rates: np.ndarray
    log_prev_jump: float | None = None
    absorbed: bool = False

    def __len__(self):
        return int(self.log_times.size)

    @property
    def times(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_times)

    @property
    def levels(self):
        return self.spec.levels_from(self.log_rates)

    @property
    def start_level(self) -> float:
        return float(self.spec.levels_from(np.array(self.start_log_rate)))

    def jump_ratios(self):
        """``x/L_x`` in rate form: ``Q(L_x)/Q(x)``, uniform for every continuous ``F``."""
        r = np.concatenate(([self.start_log_rate], self.log_rates))
        return np.exp(np.diff(r))

    def level_ratios(self):
        """``M_{z}/M_{z+1}`` for the Gnedenko levels (log-level differences)."""
        if self.spec.log_level is None:
            raise ValueError("level ratios need a spec with a log-level map")
        ll = self.spec.log_level(np.concatenate(([self.start_log_rate], self.log_rates)))
        return np.exp(-np.diff(ll))

    def log_holds(self):
        """Logs of the holding times between consecutive jump times.

        The first hold starts at the last jump before the start, so it is only
        included when that time is known.
        """
        lt = self.log_times
        if self.log_prev_jump is not None:
            lt = np.concatenate(([self.log_prev_jump], lt))
        return lt[1:] + np.log(-np.expm1(lt[:-1] - lt[1:]))

    def to_csv(self) -> str:
        rows = zip(range(1, len(self) + 1), self.times.tolist(), self.levels.tolist(),
                   self.log_times.tolist(), self.log_rates.tolist())
        return _csv(["index", "time", "level", "log_time", "log_rate"], rows,
                    comment=f"spec={self.spec.name}, start_time={self.start_time!r}")


def extremal_process(spec: ExtremalSpec, start, n_jumps: int, rng: RngStream, *,
                     stop_log_rate: float | None = None) -> ExtremalPath:
    """Hold-jump simulation of the extremal process of ``spec``.

    ``start`` is ``(time, level)``, or ``(time, None)`` to draw the level from
    the entrance law ``F^time``. From level ``x`` the process holds for an
    ``exp(Q(x))`` time and then jumps to ``L`` with ``P(L > b) = Q(b)/Q(x)``,
    that is ``Q(L) = U Q(x)``. With an entrance draw, the last jump before
    ``time`` is also sampled. It is ``time·U'`` with ``U'`` uniform and
    independent of the level, because jump times do not depend on ``F``.

    With ``stop_log_rate`` the run continues past ``n_jumps`` until
    ``log Q(level) < stop_log_rate``. Simulation stops early if the level stops
    increasing in floating point (top of a bounded support).
    """
    if n_jumps < 1:
        raise ParameterError("n_jumps must be at least 1")
    t0, level0 = start
    if not t0 > 0:
        raise ParameterError("start time must be positive")
    prev = None
    if level0 is None:
        r0 = math.log(float(rng.exponential())) - math.log(t0)
        prev = math.log(t0) + math.log(float(rng.uniform()))
    else:
        r0 = float(spec.log_rate(np.array(float(level0))))
        if not math.isfinite(r0):
            raise ParameterError("start level must lie inside the support")
    log_u = np.log(rng.uniform(n_jumps))
    log_eps = np.log(rng.exponential(n_jumps))
    rates = r0 + np.concatenate(([0.0], np.cumsum(log_u)))
    if stop_log_rate is not None:
        while rates[-1] >= stop_log_rate:
            extra = max(64, int(1.2 * (rates[-1] - stop_log_rate)) + 64)
            more_u = np.log(rng.uniform(extra))
            log_eps = np.concatenate((log_eps, np.log(rng.exponential(extra))))
            rates = np.concatenate((rates, rates[-1] + np.cumsum(more_u)))
    # hold at rate e^r lasts ε e^(-r)
    log_holds = log_eps - rates[:-1]
    log_times = accumulate_log_levels(math.log(t0), log_holds)
    log_rates = rates[1:]
    absorbed = False
    if spec.log_level is None:
        lv = np.asarray(spec.level(rates), dtype=np.float64)
        stuck = np.flatnonzero(np.diff(lv) <= 0)
        if stuck.size:
            cut = int(stuck[0])
            log_times, log_rates, absorbed = log_times[:cut], log_rates[:cut], True
    return ExtremalPath(spec, float(t0), r0, log_times, log_rates, prev, absorbed)


# -----------------------------------------------------------------------------
# inhomogeneous records
# -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RecordSequence:
    """Draws ``X``, record indicators ``B`` and running maxima ``M``.

    Arrays are 1-d for one sequence or ``(replicates, n)`` for many.
    """

    theta: float
    X: np.ndarray
    B: np.ndarray
    M: np.ndarray
    base: str = "uniform"

    def to_csv(self) -> str:
        if self.X.ndim != 1:
            raise ValueError("CSV export is for a single sequence")
        rows = zip(range(1, self.X.size + 1), self.X.tolist(), self.B.tolist(), self.M.tolist())
        return _csv(["n", "X", "B", "M"], rows, comment=f"theta={self.theta!r}, base={self.base}")


def inhomogeneous_records(theta: float, n: int, rng: RngStream, *, base: str = "uniform",
                          replicates: int | None = None) -> RecordSequence:
    """Markov sequence whose record indicators are independent Bernoulli(θ/(θ+k-1)).

    Work with the survival value ``V = 1 - F(X)``. ``V(X_1) ~ beta(θ, 1)``.
    Given the running maximum ``x``, draw a new record with probability
    ``V(x) = 1 - F(x)``, with ``V(X_{k+1}) = V(x)·beta(θ, 1)``. Otherwise draw
    from ``F`` restricted below ``x``, so ``F(X_{k+1}) = F(x)·U``. For the
    uniform base this gives ``X_1 ~ beta(1, θ)``. A record is
    ``x + (1 - x)β`` with ``β ~ beta(1, θ)``, and a non-record is uniform on
    ``(0, x)``.

    ``base`` is ``"uniform"`` or ``"exponential"``. Record indicators come from
    the construction, so rounding of ``X`` near the top of the support cannot
    create ties.
    """
    _check_theta(theta)
    if n < 1:
        raise ParameterError("n must be at least 1")
    if base not in ("uniform", "exponential"):
        raise ParameterError(f"unknown base law {base!r}")
    r = 1 if replicates is None else int(replicates)
    # log V of the running maximum; V(X_1) = U^(1/θ)
    log_v = np.log(rng.uniform(r)) / theta
    B = np.zeros((r, n), dtype=np.int8)
    log_vx = np.empty((r, n))  # log V(X_k)
    B[:, 0] = 1
    log_vx[:, 0] = log_v
    for k in range(1, n):
        u_choice = rng.uniform(r)
        u_up = rng.uniform(r)
        u_down = rng.uniform(r)
        rec = u_choice < np.exp(log_v)
        up = log_v + np.log(u_up) / theta
        # F(X) = F(x)·U  ->  V(X) = 1 - (1 - V(x)) U
        down = np.log1p(-(-np.expm1(log_v)) * u_down)
        log_vx[:, k] = np.where(rec, up, down)
        B[:, k] = rec
        log_v = np.where(rec, up, log_v)
    if base == "uniform":
        X = -np.expm1(log_vx)
    else:
        X = -log_vx
    M = np.maximum.accumulate(X, axis=1)
    if replicates is None:
        X, B, M = X[0], B[0], M[0]
    return RecordSequence(float(theta), X, B, M, base)
