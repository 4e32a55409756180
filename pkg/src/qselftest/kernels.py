"""Selects the correlation kernel backend at import time.

Prefers the compiled extension; falls back to the numpy implementation.
Set QSELFTEST_PURE_PYTHON=1 to force the fallback (used by the benchmark
and by tests that compare the two backends).
"""

from __future__ import annotations

import os

from . import _pykernel

if os.environ.get("QSELFTEST_PURE_PYTHON") == "1":
    corr_table = _pykernel.corr_table
    BACKEND = "python"
else:
    try:
        from . import _corekernel

        corr_table = _corekernel.corr_table
        BACKEND = "cython"
    except ImportError:
        corr_table = _pykernel.corr_table
        BACKEND = "python"


def backend_name() -> str:
    return BACKEND
