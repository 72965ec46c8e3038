"""Numeric hot loops with a compiled fast path and a pure-Python fallback.

The compiled extension is built by setup.py when Cython and a C compiler
are available; otherwise the pure backend is selected at import time.
Set CHAPKIT_PURE_KERNELS=1 to force the pure backend.
"""

import os

from chapkit._kernels import pure as _pure

if os.environ.get("CHAPKIT_PURE_KERNELS"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from chapkit._kernels import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

lcs_length = _impl.lcs_length
count_window_disagreements = _impl.count_window_disagreements
bm25_accumulate = _impl.bm25_accumulate

__all__ = ["BACKEND", "bm25_accumulate", "count_window_disagreements", "lcs_length"]
