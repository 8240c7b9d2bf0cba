"""Selects the compiled replay kernels when available, else the pure-Python ones.

Set ``LAPRATING_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

_compiled = None
if os.environ.get("LAPRATING_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"

replay_elo = _impl.replay_elo
replay_velo = _impl.replay_velo
replay_surface = _impl.replay_surface


def available_backends() -> dict:
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    else:
        try:
            from . import _kernels
            out["cython"] = _kernels
        except ImportError:
            pass
    return out
