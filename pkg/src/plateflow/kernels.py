"""Stencil kernel dispatch: numba-jitted hot path with a pure-numpy fallback.

The env flag PLATEFLOW_NUMBA selects the backend at import time.  Set it to
0/false/off/no to force the numpy path; anything else (or unset) uses numba
when it imports cleanly.  Both implementations are importable side by side
(``plateflow._kernels_numba`` / ``plateflow._kernels_numpy``) so tests and
benchmarks can compare them directly regardless of the flag.
"""

import os

from . import _kernels_numpy

_FALSEY = {"0", "false", "off", "no"}


def _numba_requested() -> bool:
    return os.environ.get("PLATEFLOW_NUMBA", "1").strip().lower() not in _FALSEY


if _numba_requested():
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - exercised only without numba
        _impl = _kernels_numpy
        BACKEND = "numpy"
else:
    _impl = _kernels_numpy
    BACKEND = "numpy"


laplacian_1d = _impl.laplacian_1d
laplacian_adjoint_1d = _impl.laplacian_adjoint_1d
laplacian_2d = _impl.laplacian_2d
laplacian_adjoint_2d = _impl.laplacian_adjoint_2d


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
