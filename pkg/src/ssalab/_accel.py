"""Optional numba acceleration.

Set ``SSALAB_DISABLE_NUMBA=1`` to route every kernel through its pure-numpy
implementation even when numba is importable. The flag is read once, at import
time. The jitted variants stay importable either way so the benchmark can
compare both paths in one process.
"""

import os

DISABLED = os.environ.get("SSALAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba

    NUMBA_IMPORTABLE = True
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None
    NUMBA_IMPORTABLE = False

HAS_NUMBA = NUMBA_IMPORTABLE and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator.

    Compilation is lazy, so decorating costs nothing until the first call.
    """
    if NUMBA_IMPORTABLE:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
