"""
Numba switch.

Set ``HMMSNN_NUMBA=0`` in the environment to run every kernel through the
pure-numpy fallback instead of the compiled path. Useful for debugging and
for platforms without numba.
"""

import os

_flag = os.environ.get("HMMSNN_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper


USE_NUMBA = NUMBA_REQUESTED and HAS_NUMBA
