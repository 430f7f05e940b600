"""Import-time selection between the compiled kernels and the numpy fallback.

Set BELLRAND_PURE_PYTHON=1 to force the fallback.
"""

import os

from bellrand import _kernels_py

_compiled = None
if not os.environ.get("BELLRAND_PURE_PYTHON"):
    try:
        from bellrand import _kernels as _compiled
    except ImportError:
        _compiled = None

kernels = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"


def available() -> dict:
    """Map of backend name to kernel module for every backend that imports."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    else:
        try:
            from bellrand import _kernels

            out["cython"] = _kernels
        except ImportError:
            pass
    return out


def get(name: str | None = None):
    if name is None:
        return kernels
    table = available()
    if name not in table:
        raise ValueError(f"backend {name!r} is not available (have {sorted(table)})")
    return table[name]
