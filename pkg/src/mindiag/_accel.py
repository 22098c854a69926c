"""Backend selection for the hot kernels.

Set ``MINDIAG_DISABLE_NUMBA=1`` to force the pure-numpy code paths. When
numba is not importable the numpy paths are used automatically.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("MINDIAG_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED


def maybe_njit(fn):
    """Compile ``fn`` with numba when available, otherwise return None."""
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, fastmath=False)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
