"""Kernel backend selection.

The switching simulator's inner loop runs either as a numba-compiled step
loop or as a pure-numpy vectorized scan.  The environment variable
``FDPFC_BACKEND`` selects it:

    auto   (default) numba when importable, numpy otherwise
    numba  require the compiled loop
    numpy  force the vectorized fallback

``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

BACKEND_ENV_VAR = "FDPFC_BACKEND"


def active_backend() -> str:
    """Resolve the kernel backend ("numba" or "numpy") from the environment."""
    req = os.environ.get(BACKEND_ENV_VAR, "auto").strip().lower()
    if req in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if req == "numba":
        if not HAS_NUMBA:
            raise RuntimeError(f"{BACKEND_ENV_VAR}=numba requested but numba is not importable")
        return "numba"
    if req == "numpy":
        return "numpy"
    raise ValueError(f"unrecognized {BACKEND_ENV_VAR} value {req!r} (use auto, numba, or numpy)")
