"""Compare the jitted and pure-numpy kernel variants.

    python benchmarks/bench_kernels.py [--sizes 1000 100000 1000000] [--repeat 5]

Both variants are called directly, so the comparison does not depend on
SSALAB_DISABLE_NUMBA. Each timing is the best of ``--repeat`` runs after one
warm-up call (which also triggers compilation).
"""

import argparse
import time

import numpy as np

from ssalab import RngStream
from ssalab._accel import NUMBA_IMPORTABLE
from ssalab.kernels import (
    _accumulate_log_levels_loop,
    _accumulate_log_levels_numpy,
    _upper_hull_loop,
    _upper_hull_numpy,
)


def best_of(f, args, repeat):
    f(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[1_000, 100_000, 1_000_000])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not NUMBA_IMPORTABLE:
        print("numba is not installed; the loop variants run as plain Python")

    rng = RngStream(2024)
    print(f"{'kernel':<24}{'n':>10}{'loop (ms)':>12}{'numpy (ms)':>12}{'ratio':>8}")
    for n in args.sizes:
        inc = rng.normal(n) * 5.0
        t = np.cumsum(rng.exponential(n))
        w = np.cumsum(rng.normal(n) * np.sqrt(np.diff(np.r_[0.0, t])))
        cases = [
            ("accumulate_log_levels", _accumulate_log_levels_loop, _accumulate_log_levels_numpy,
             (0.0, inc)),
            ("upper_hull", _upper_hull_loop, _upper_hull_numpy, (t, w)),
        ]
        for name, loop, vec, fargs in cases:
            a = best_of(loop, fargs, args.repeat)
            b = best_of(vec, fargs, args.repeat)
            print(f"{name:<24}{n:>10}{a * 1e3:>12.3f}{b * 1e3:>12.3f}{b / a:>8.1f}")


if __name__ == "__main__":
    main()
