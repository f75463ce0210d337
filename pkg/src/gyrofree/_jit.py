"""Backend selection for the array kernels.

The kernels in :mod:`gyrofree._kernels` are written with plain numpy
operations. When numba is importable they are compiled with ``njit``;
setting ``GYROFREE_DISABLE_NUMBA=1`` in the environment (before import)
runs the very same source as ordinary numpy code instead.
"""

import os

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    njit = None

_FALSY = ("", "0", "false", "no", "off")

NUMBA_DISABLED_BY_ENV = (
    os.environ.get("GYROFREE_DISABLE_NUMBA", "").strip().lower() not in _FALSY
)
NUMBA_ENABLED = njit is not None and not NUMBA_DISABLED_BY_ENV


def jit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged."""
    if NUMBA_ENABLED:
        return njit(cache=True)(func)
    return func


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
