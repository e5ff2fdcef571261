"""Optional numba acceleration.

Set ``DIGOF_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag is
read once at import time.
"""
import logging
import os

_FALSY = {"", "0", "false", "no", "off"}

DISABLED_BY_ENV = os.environ.get("DIGOF_DISABLE_NUMBA", "").strip().lower() not in _FALSY

try:
    import numba

    logging.getLogger("numba").setLevel(logging.WARNING)
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not DISABLED_BY_ENV


def njit(func):
    """Compile ``func`` in nopython mode when numba is importable, else return it unchanged."""
    if not NUMBA_AVAILABLE:
        return func
    return numba.njit(cache=True, nogil=True)(func)
