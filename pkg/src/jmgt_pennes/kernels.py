"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``JPS_KERNELS=python`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("JPS_KERNELS", "").lower() == "python":
    _impl, BACKEND = _kernels_py, "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl, BACKEND = _kernels_py, "python"

midpoint_march_diag = _impl.midpoint_march_diag
exp_march = _impl.exp_march
gronwall_recurrence = _impl.gronwall_recurrence


def backends():
    """Map of every importable backend name to its module."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
