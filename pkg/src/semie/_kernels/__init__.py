"""Kernel backend selection.

The SGNS training loop and the non-negative lasso coordinate descent
dominate runtime.  Both exist twice: as Cython extensions and as pure
Python/numpy fallbacks with identical arithmetic.  The compiled
versions are preferred at import time; set SEMIE_PURE_PYTHON=1 to force
the fallbacks (used by the benchmark and the parity tests).
"""

from __future__ import annotations

import os

_FORCE_PY = os.environ.get("SEMIE_PURE_PYTHON", "0") not in ("", "0")

if not _FORCE_PY:
    try:
        from ._lasso_cy import nn_lasso
        from ._sgns_cy import train_epoch
        COMPILED = True
    except ImportError:
        _FORCE_PY = True

if _FORCE_PY:
    from ._lasso_py import nn_lasso
    from ._sgns_py import train_epoch
    COMPILED = False

BACKEND = "cython" if COMPILED else "python"

__all__ = ["train_epoch", "nn_lasso", "COMPILED", "BACKEND"]
