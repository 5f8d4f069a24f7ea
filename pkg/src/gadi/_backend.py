"""Select the compiled kernels when available, else the NumPy fallback.

Set ``GADI_BACKEND=python`` to force the fallback (used by the benchmark and
the backend-parity tests).
"""

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("GADI_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

CONVERGED = _fallback.CONVERGED
MAXITER = _fallback.MAXITER
BREAKDOWN = _fallback.BREAKDOWN


def get_kernels(name=None):
    """Return the kernel module for ``name`` ("cython", "python") or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
