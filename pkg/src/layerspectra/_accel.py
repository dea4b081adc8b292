"""Numba toggle shared by every hot kernel.

Set ``LAYERSPECTRA_NO_NUMBA=1`` to force the pure-numpy code paths.
"""
import os

_flag = os.environ.get("LAYERSPECTRA_NO_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("disabled by LAYERSPECTRA_NO_NUMBA")
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrapper(func):
            return func

        return wrapper


def select(numba_impl, numpy_impl):
    """Pick the jitted kernel when numba is active, else the numpy one."""
    return numba_impl if NUMBA_AVAILABLE else numpy_impl
