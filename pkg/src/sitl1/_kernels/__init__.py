"""Backend selection for the hot kernels.

The compiled extension ``_core`` is preferred; the numpy reference in
``_pure`` is used when it failed to build or when the environment variable
``SITL1_BACKEND`` is set to ``python``.
"""
import os

from . import _pure

CONVERGED = _pure.CONVERGED
MAX_ITER = _pure.MAX_ITER
NUMERICAL = _pure.NUMERICAL

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

if _core is not None and os.environ.get("SITL1_BACKEND", "").lower() != "python":
    BACKEND = "cython"
    ipm = _core.ipm
    subset_l0_counts = _core.subset_l0_counts
else:
    BACKEND = "python"
    ipm = _pure.ipm
    subset_l0_counts = _pure.subset_l0_counts


def available_backends():
    names = ["python"]
    if _core is not None:
        names.append("cython")
    return names


def get_backend(name):
    """Return the kernel module for ``name`` (``"python"`` or ``"cython"``)."""
    if name == "python":
        return _pure
    if name == "cython":
        if _core is None:
            raise ImportError("compiled kernels are not built")
        return _core
    raise ValueError(f"unknown backend {name!r}")
