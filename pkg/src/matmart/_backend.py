"""Kernel backend selection.

Hot numerical kernels exist in two flavors: scalar loops compiled with
numba's ``@njit``, and vectorized pure-numpy batch routines.  The active
flavor is chosen once at import time from the ``MATMART_BACKEND``
environment variable:

* ``numba``  -- require numba, compile the loop kernels (error if missing)
* ``numpy``  -- vectorized numpy only, numba never imported
* ``auto``   -- numba when importable, else numpy (default)

Both backends produce results that agree to floating-point noise; each is
bit-deterministic on its own, which is what the reproducibility contract
requires.  ``benchmarks/bench_backends.py`` compares their throughput.
"""

import os

_ENV_VAR = "MATMART_BACKEND"
_choice = os.environ.get(_ENV_VAR, "auto").strip().lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"{_ENV_VAR} must be one of 'auto', 'numba', 'numpy' (got {_choice!r})"
    )

if _choice == "numpy":
    USE_NUMBA = False
elif _choice == "numba":
    import numba  # noqa: F401  (fail loudly if unavailable)

    USE_NUMBA = True
else:
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:
        USE_NUMBA = False


def active_backend():
    """Name of the kernel backend in use: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"


def maybe_njit(func):
    """Compile ``func`` with numba when the numba backend is active.

    Under the numpy backend the function is returned unchanged, so the
    same source runs as plain Python (used only on cold, per-matrix paths;
    hot paths dispatch to vectorized numpy twins instead).
    """
    if USE_NUMBA:
        import numba

        return numba.njit(cache=True, nogil=True)(func)
    return func
