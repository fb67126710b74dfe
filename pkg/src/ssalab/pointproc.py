"""Finite point sets on half-open windows and the scale-invariant Poisson process.

A rate-θ scale-invariant PPP has intensity ``θ dx/x``: the count in ``(a, b]``
is Poisson with mean ``θ log(b/a)``, and in log coordinates it is a stationary
Poisson process of rate θ. Point sets can therefore be held either as plain
values or as their logarithms; the log form is what long simulated paths use,
since their values leave the floating-point range after a few hundred jumps.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .distributions import ParameterError, RngStream

__all__ = [
    "DuplicatePointError",
    "Window",
    "PointSet",
    "sample_scale_invariant_ppp",
    "spacings",
    "invert",
    "counts_in_log_bins",
    "forward_ratios",
    "backward_ratios",
]


class DuplicatePointError(ValueError):
    """Two points compare equal; a simple point process never produces ties."""


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def _exp(x):
    with np.errstate(over="ignore"):
        return np.exp(x)


class Window:
    """The half-open interval ``(lo, hi]`` with ``0 <= lo <= hi``.

    Windows built with :meth:`from_logs` keep exact log bounds and may have
    ``hi`` beyond the floating-point range.
    """

    __slots__ = ("lo", "hi", "log_lo", "log_hi", "_linear")

    def __init__(self, lo: float, hi: float):
        lo, hi = float(lo), float(hi)
        if not (lo >= 0.0 and hi >= lo) or math.isnan(hi):
            raise ParameterError(f"invalid window ({lo}, {hi}]")
        self.lo, self.hi = lo, hi
        self.log_lo, self.log_hi = float(_log(lo)), float(_log(hi))
        self._linear = True

    @classmethod
    def from_logs(cls, log_lo: float, log_hi: float) -> "Window":
        log_lo, log_hi = float(log_lo), float(log_hi)
        if not log_hi >= log_lo or math.isnan(log_lo):
            raise ParameterError(f"invalid log window ({log_lo}, {log_hi}]")
        w = cls.__new__(cls)
        w.log_lo, w.log_hi = log_lo, log_hi
        w.lo, w.hi = float(_exp(log_lo)), float(_exp(log_hi))
        w._linear = False
        return w

    @property
    def log_length(self) -> float:
        """``log(hi/lo)``, the expected count per unit rate."""
        if self.log_hi == self.log_lo:
            return 0.0
        if self._linear and self.lo > 0.0 and math.isfinite(self.hi):
            return math.log(self.hi / self.lo)
        return self.log_hi - self.log_lo

    @property
    def is_linear(self) -> bool:
        return self._linear

    def __eq__(self, other):
        if not isinstance(other, Window):
            return NotImplemented
        if self._linear and other._linear:
            return self.lo == other.lo and self.hi == other.hi
        return self.log_lo == other.log_lo and self.log_hi == other.log_hi

    def __hash__(self):
        return hash((self.log_lo, self.log_hi))

    def __repr__(self):
        if self._linear:
            return f"Window({self.lo!r}, {self.hi!r})"
        return f"Window.from_logs({self.log_lo!r}, {self.log_hi!r})"


class PointSet:
    """A strictly increasing finite set of points inside a window.

    Immutable: the backing array is read-only. Membership is checked on the
    closed window, because inversion sends a point sitting at ``hi`` onto the
    open end of the inverted window.
    """

    __slots__ = ("window", "_lin", "_log", "_inverse")

    def __init__(self, points, window: Window):
        arr = np.array(points, dtype=np.float64).reshape(-1)
        self.window = window
        self._lin = arr
        self._log = None
        self._inverse = None
        self._validate(arr, window.lo, window.hi)
        arr.setflags(write=False)

    @classmethod
    def from_logs(cls, log_points, window: Window) -> "PointSet":
        arr = np.array(log_points, dtype=np.float64).reshape(-1)
        ps = cls.__new__(cls)
        ps.window = window
        ps._lin = None
        ps._log = arr
        ps._inverse = None
        cls._validate(arr, window.log_lo, window.log_hi)
        arr.setflags(write=False)
        return ps

    @staticmethod
    def _validate(arr, lo, hi):
        if arr.size == 0:
            return
        if np.isnan(arr).any():
            raise ValueError("points must not be NaN")
        d = np.diff(arr)
        if (d == 0).any():
            raise DuplicatePointError("duplicate points in a simple point set")
        if (d < 0).any():
            raise ValueError("points must be strictly increasing")
        if arr[0] < lo or arr[-1] > hi:
            raise ValueError("points must lie inside the window")

    # views ---------------------------------------------------------------------

    @property
    def is_log(self) -> bool:
        return self._lin is None

    @property
    def points(self) -> np.ndarray:
        """Point values; entries overflow to ``inf`` for log-mode sets out of range."""
        if self._lin is not None:
            return self._lin
        return _exp(self._log)

    @property
    def log_points(self) -> np.ndarray:
        if self._log is not None:
            return self._log
        return _log(self._lin)

    def __len__(self):
        return int((self._lin if self._lin is not None else self._log).size)

    def __iter__(self):
        return iter(self.points.tolist())

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        if self.window != other.window or self.is_log != other.is_log:
            return False
        a = self._lin if self._lin is not None else self._log
        b = other._lin if other._lin is not None else other._log
        return bool(np.array_equal(a, b))

    def __hash__(self):
        return hash((self.window, len(self)))

    def __repr__(self):
        mode = "log" if self.is_log else "linear"
        return f"PointSet(n={len(self)}, window={self.window!r}, mode={mode})"

    def scale(self, c: float) -> "PointSet":
        """Multiply every point and both window ends by ``c > 0``."""
        if c <= 0:
            raise ParameterError("scale factor must be positive")
        if self.is_log:
            lc = math.log(c)
            w = Window.from_logs(self.window.log_lo + lc, self.window.log_hi + lc)
            return PointSet.from_logs(self._log + lc, w)
        return PointSet(self._lin * c, Window(self.window.lo * c, self.window.hi * c))

    # serialisation ---------------------------------------------------------------

    def to_json(self) -> str:
        if self.is_log:
            payload = {"log_window": [self.window.log_lo, self.window.log_hi],
                       "log_points": self._log.tolist()}
        else:
            payload = {"window": [self.window.lo, self.window.hi], "points": self._lin.tolist()}
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "PointSet":
        data = json.loads(text)
        if "log_points" in data:
            return cls.from_logs(data["log_points"], Window.from_logs(*data["log_window"]))
        return cls(data["points"], Window(*data["window"]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.is_log:
            buf.write(f"# log_window {self.window.log_lo!r} {self.window.log_hi!r}\n")
            w.writerow(["log_point"])
            w.writerows([repr(v)] for v in self._log.tolist())
        else:
            buf.write(f"# window {self.window.lo!r} {self.window.hi!r}\n")
            w.writerow(["point"])
            w.writerows([repr(v)] for v in self._lin.tolist())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PointSet":
        lines = text.splitlines()
        tag, lo, hi = lines[0].lstrip("# ").split()
        values = [float(row[0]) for row in csv.reader(lines[2:]) if row]
        if tag == "log_window":
            return cls.from_logs(values, Window.from_logs(float(lo), float(hi)))
        return cls(values, Window(float(lo), float(hi)))


def sample_scale_invariant_ppp(theta: float, window: Window, rng: RngStream) -> PointSet:
    """Sample a rate-``theta`` scale-invariant PPP restricted to ``window``.

    The count is Poisson(θ log(hi/lo)); given the count, the points are i.i.d.
    log-uniform on the window. Log-mode windows give log-mode point sets.
    """
    if not theta > 0:
        raise ParameterError("theta must be positive")
    length = window.log_length
    if length == 0.0:
        return PointSet([], window) if window.is_linear else PointSet.from_logs([], window)
    if not math.isfinite(length):
        raise ParameterError("window must have finite log-length (lo > 0)")
    n = int(rng.poisson(theta * length))
    logs = np.sort(window.log_lo + length * rng.uniform(n))
    if not window.is_linear:
        return PointSet.from_logs(logs, window)
    pts = np.minimum(window.lo * np.exp(logs - window.log_lo), window.hi)
    return PointSet(pts, window)


def spacings(ps: PointSet) -> PointSet:
    """Sorted gaps between consecutive points, on the window ``(0, hi - lo]``."""
    if ps.is_log:
        lw = ps.window
        log_width = lw.log_hi + math.log(-math.expm1(lw.log_lo - lw.log_hi)) if lw.log_hi > lw.log_lo else -math.inf
        w = Window.from_logs(-math.inf, log_width)
        if len(ps) < 2:
            return PointSet.from_logs([], w)
        lp = ps.log_points
        gaps = lp[1:] + np.log(-np.expm1(lp[:-1] - lp[1:]))
        return PointSet.from_logs(np.sort(gaps), w)
    w = Window(0.0, ps.window.hi - ps.window.lo)
    if len(ps) < 2:
        return PointSet([], w)
    return PointSet(np.sort(np.diff(ps.points)), w)


def invert(ps: PointSet) -> PointSet:
    """Reciprocals ``{1/x}``, on the window ``(1/hi, 1/lo]``.

    Inverting twice returns the original object, so the round trip is exact.
    """
    if ps._inverse is not None:
        return ps._inverse
    if ps.is_log:
        w = Window.from_logs(-ps.window.log_hi, -ps.window.log_lo)
        out = PointSet.from_logs(-ps.log_points[::-1], w)
    else:
        with np.errstate(divide="ignore"):
            w = Window(1.0 / ps.window.hi if ps.window.hi > 0 else math.inf,
                       1.0 / ps.window.lo if ps.window.lo > 0 else math.inf)
            out = PointSet(1.0 / ps.points[::-1], w)
    out._inverse = ps
    ps._inverse = out
    return out


def counts_in_log_bins(ps: PointSet, n_bins: int) -> np.ndarray:
    """Counts in ``n_bins`` geometrically equal sub-windows ``(e_k, e_{k+1}]``."""
    if n_bins < 1:
        raise ParameterError("n_bins must be at least 1")
    w = ps.window
    if len(ps) == 0:
        return np.zeros(n_bins, dtype=np.int64)
    if not math.isfinite(w.log_length):
        raise ParameterError("log bins need a window with lo > 0")
    inner = w.log_lo + w.log_length * np.arange(1, n_bins) / n_bins
    which = np.searchsorted(inner, ps.log_points, side="left")
    return np.bincount(which, minlength=n_bins).astype(np.int64)


def forward_ratios(ps: PointSet, anchor: float | None = None) -> np.ndarray:
    """``x/X_1, X_1/X_2, ...`` with ``x`` the window's lower end unless given.

    For a rate-θ scale-invariant PPP these are i.i.d. beta(θ, 1).
    """
    lp = ps.log_points
    la = ps.window.log_lo if anchor is None else math.log(anchor)
    return np.exp(-np.diff(np.concatenate(([la], lp)))) if lp.size else np.empty(0)


def backward_ratios(ps: PointSet, anchor: float | None = None) -> np.ndarray:
    """``X_N/x, X_{N-1}/X_N, ...`` with ``x`` the window's upper end unless given."""
    lp = ps.log_points
    la = ps.window.log_hi if anchor is None else math.log(anchor)
    seq = np.concatenate((lp, [la]))[::-1]
    return np.exp(np.diff(seq)) if lp.size else np.empty(0)
