"""Hot inner loops, each with a jitted loop variant and a vectorised numpy variant.

The public names (:func:`accumulate_log_levels`, :func:`upper_hull`) dispatch to
the jitted variant when numba is available and not disabled through
``SSALAB_DISABLE_NUMBA``. Both variants are always importable under their
private names for testing and benchmarking.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import HAS_NUMBA, njit

__all__ = ["accumulate_log_levels", "upper_hull", "USING_NUMBA"]

USING_NUMBA = HAS_NUMBA


# --------------------------------------------------------------------------
# running log-sum-exp: log(t0 + x_1 + ... + x_k) for k = 1..n
# --------------------------------------------------------------------------


@njit(cache=True)
def _accumulate_log_levels_loop(log_start, log_increments):
    n = log_increments.shape[0]
    out = np.empty(n)
    acc = log_start
    for i in range(n):
        b = log_increments[i]
        if acc == -np.inf:
            acc = b
        elif b != -np.inf:
            if acc >= b:
                acc = acc + math.log1p(math.exp(b - acc))
            else:
                acc = b + math.log1p(math.exp(acc - b))
        out[i] = acc
    return out


def _accumulate_log_levels_numpy(log_start, log_increments):
    seq = np.concatenate(([log_start], np.asarray(log_increments, dtype=np.float64)))
    return np.logaddexp.accumulate(seq)[1:]


def accumulate_log_levels(log_start: float, log_increments) -> np.ndarray:
    """Return ``log(exp(log_start) + cumsum(exp(log_increments)))`` without overflow.

    ``log_start`` may be ``-inf`` (a path starting from zero).
    """
    inc = np.ascontiguousarray(log_increments, dtype=np.float64)
    if inc.size == 0:
        return np.empty(0)
    if USING_NUMBA:
        return _accumulate_log_levels_loop(float(log_start), inc)
    return _accumulate_log_levels_numpy(float(log_start), inc)


# --------------------------------------------------------------------------
# upper convex hull (least concave majorant) of points with increasing x
# --------------------------------------------------------------------------


@njit(cache=True)
def _upper_hull_loop(x, y):
    n = x.shape[0]
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        while top >= 2:
            a = stack[top - 2]
            b = stack[top - 1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross >= 0.0:
                top -= 1
            else:
                break
        stack[top] = i
        top += 1
    return stack[:top].copy()


def _upper_hull_numpy(x, y):
    # Quickhull restricted to the upper chain: every round adds, for each
    # current chord, the point lying highest above it.
    n = x.shape[0]
    if n <= 2:
        return np.arange(n, dtype=np.int64)
    hull = np.array([0, n - 1], dtype=np.int64)
    idx = np.arange(n)
    while True:
        starts = hull[:-1]
        ends = hull[1:]
        slopes = (y[ends] - y[starts]) / (x[ends] - x[starts])
        seg = np.searchsorted(hull, idx, side="right") - 1
        seg = np.minimum(seg, starts.size - 1)
        height = y - (y[starts[seg]] + slopes[seg] * (x - x[starts[seg]]))
        height[hull] = 0.0
        seg_max = np.maximum.reduceat(height, starts)
        above = seg_max[seg] > 0.0
        if not above.any():
            return hull
        hit = above & (height == seg_max[seg])
        _, first = np.unique(seg[hit], return_index=True)
        hull = np.union1d(hull, idx[hit][first]).astype(np.int64)


def upper_hull(x, y) -> np.ndarray:
    """Indices of the vertices of the upper hull of ``(x[i], y[i])``.

    ``x`` must be strictly increasing. Both endpoints are always included;
    exactly collinear interior points are dropped.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if x.size > 1 and not np.all(np.diff(x) > 0):
        raise ValueError("x must be strictly increasing")
    if USING_NUMBA:
        return _upper_hull_loop(x, y)
    return _upper_hull_numpy(x, y)
