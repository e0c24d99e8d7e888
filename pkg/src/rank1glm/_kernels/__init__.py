"""Hot-kernel backend selection.

The compiled Cython kernel is used when available; the pure-numpy
fallback otherwise. Set the environment variable ``RANK1GLM_PURE_PYTHON``
to any non-empty value to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""

import os

if os.environ.get("RANK1GLM_PURE_PYTHON"):
    from ._py import rank1_obj_grad

    BACKEND = "python"
else:
    try:
        from ._core import rank1_obj_grad

        BACKEND = "cython"
    except ImportError:
        from ._py import rank1_obj_grad

        BACKEND = "python"

__all__ = ["rank1_obj_grad", "BACKEND"]
