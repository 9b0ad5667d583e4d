"""Kernel backend selection.

The compiled Cython kernels are preferred when importable; otherwise the
NumPy implementation is used. Setting the environment variable
AXCIRC_PURE_PYTHON to a nonempty value forces the NumPy backend, which
is useful for benchmarking and for debugging kernel discrepancies.
"""

import os

if os.environ.get("AXCIRC_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels

BACKEND_NAME = kernels.BACKEND_NAME


def backend_name():
    """Name of the active kernel backend: "cython" or "python"."""
    return BACKEND_NAME
