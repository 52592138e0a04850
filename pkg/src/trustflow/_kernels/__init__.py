"""Hot numerical kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when it imports; set
``TRUSTFLOW_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("TRUSTFLOW_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = _impl.BACKEND
best_response = _impl.best_response
path_utility = _impl.path_utility
dual_decomposition = _impl.dual_decomposition
ism_fixed_point = _impl.ism_fixed_point


def compiled_available():
    try:
        from . import _core  # noqa: F401
    except ImportError:
        return False
    return True


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None)."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _core
        return _core
    raise ValueError(f"unknown kernel backend {name!r}")
