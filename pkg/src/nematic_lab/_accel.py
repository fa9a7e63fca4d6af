"""Numba toggle for the hot kernels.

Set ``NEMATIC_LAB_NUMBA=0`` to force the pure-numpy paths.  The flag is read
once at import time.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("NEMATIC_LAB_NUMBA", "1").strip().lower()

try:  # pragma: no cover - exercised implicitly by whichever path is active
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in {"0", "false", "no", "off"}


def njit(fn):
    """``numba.njit`` when numba is importable, identity otherwise.

    Loop kernels are always compiled when numba exists so that tests and the
    benchmark can compare both paths regardless of ``USE_NUMBA``.
    """
    if _numba is None:
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
