"""Pick the round kernel at import time.

The compiled ``_kernel`` is used when it was built; set
``FICTPLAY_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _kernel_py

KERNELS = {"python": _kernel_py}

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    KERNELS["cython"] = _compiled

if _compiled is not None and not os.environ.get("FICTPLAY_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

FP, AFP, OFP = _kernel_py.FP, _kernel_py.AFP, _kernel_py.OFP


def get_kernel(name: str | None = None):
    """Kernel module by name (``"cython"`` / ``"python"``), default the active one."""
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} unavailable; have {sorted(KERNELS)}") from None


def available() -> list[str]:
    return sorted(KERNELS)
