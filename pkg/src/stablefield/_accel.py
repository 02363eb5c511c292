"""Backend selection for the hot summation kernels.

Set ``STABLEFIELD_DISABLE_NUMBA=1`` to force the pure-numpy path, e.g. when
numba is unavailable or to cross-check the compiled kernels.
"""

import os

_FLAG = os.environ.get("STABLEFIELD_DISABLE_NUMBA", "").strip().lower()

try:
    if _FLAG in ("1", "true", "yes", "on"):
        raise ImportError("numba disabled by STABLEFIELD_DISABLE_NUMBA")
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised by the fallback CI job
    HAS_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if HAS_NUMBA else "numpy"


def max_terms(default=400_000_000):
    """Summation budget shared by every truncated double series."""
    raw = os.environ.get("STABLEFIELD_MAX_TERMS")
    if not raw:
        return default
    return int(float(raw))
