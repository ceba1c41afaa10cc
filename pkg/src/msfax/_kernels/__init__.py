"""Backend selection for the coordinate-descent kernel.

The compiled extension is used when it imported cleanly; otherwise the
NumPy fallback takes over. Setting the environment variable named by
config.PURE_PYTHON_ENV to a non-empty value forces the fallback, which is
useful for benchmarking and for debugging numerical questions.
"""

import os

from ..config import PURE_PYTHON_ENV
from . import _lasso_py

if os.environ.get(PURE_PYTHON_ENV, ""):
    BACKEND = "python"
    lasso_cd_gram = _lasso_py.lasso_cd_gram
else:
    try:
        from . import _lasso

        BACKEND = "compiled"
        lasso_cd_gram = _lasso.lasso_cd_gram
    except ImportError:
        BACKEND = "python"
        lasso_cd_gram = _lasso_py.lasso_cd_gram

__all__ = ["BACKEND", "lasso_cd_gram"]
