"""Numerical backend selection.

The hot kernels (grid Hermite reductions, the quadruple convolution sum)
ship in two interchangeable implementations: a numba-compiled one and a
pure-numpy one.  The environment variable LOGLAB_BACKEND picks between
them:

    auto   use numba when it imports, numpy otherwise (default)
    numba  require numba, fail loudly if unavailable
    numpy  force the pure-numpy path

The choice is made once at import time so every kernel call in a process
uses the same backend.
"""

import os

_VALID = ("auto", "numba", "numpy")


def _resolve(flag: str) -> bool:
    flag = flag.strip().lower()
    if flag not in _VALID:
        raise ValueError(
            f"LOGLAB_BACKEND={flag!r} is not recognized; expected one of {_VALID}"
        )
    try:
        import numba  # noqa: F401

        have_numba = True
    except ImportError:
        have_numba = False
    if flag == "numba" and not have_numba:
        raise ImportError("LOGLAB_BACKEND=numba but numba is not importable")
    if flag == "auto":
        return have_numba
    return flag == "numba"


USE_NUMBA = _resolve(os.environ.get("LOGLAB_BACKEND", "auto"))
BACKEND = "numba" if USE_NUMBA else "numpy"
