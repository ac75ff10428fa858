"""Kernel selection: the compiled extension when importable, the pure-Python
fallback otherwise. Set ENTRES_PURE_KERNELS=1 to force the fallback."""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("ENTRES_PURE_KERNELS") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

levenshtein = _impl.levenshtein
lev_score = _impl.lev_score
jw_score = _impl.jw_score

__all__ = ["BACKEND", "levenshtein", "lev_score", "jw_score"]
