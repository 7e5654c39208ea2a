"""Backend selection for the hot loops.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback. Set ``BES3_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("BES3_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "cython" if _impl is not _fallback else "numpy"

norm3d_paths = _impl.norm3d_paths
euler_paths = _impl.euler_paths
bes3_bridge_minima = _impl.bes3_bridge_minima
brownian_first_crossing = _impl.brownian_first_crossing


def backends():
    """Map of available backend name -> module, for tests and benchmarks."""
    found = {"numpy": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
