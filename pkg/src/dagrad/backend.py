"""Kernel backend selection: numba-jitted hot loops with a numpy fallback.

The jitted path is used whenever numba imports cleanly.  Set the
environment variable ``DAGRAD_NUMBA=0`` before import to force the pure
numpy implementations (useful for debugging and for the backend benchmark
under ``benchmarks/``).
"""

from __future__ import annotations

import os

ENV_FLAG = "DAGRAD_NUMBA"


def _detect() -> bool:
    if os.environ.get(ENV_FLAG, "1") == "0":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _detect()


def backend_name() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return "numba" if NUMBA_ENABLED else "numpy"
