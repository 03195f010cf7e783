"""Kernel backend selection.

The hot loops (peak scanning, Haar energy, per-window statistics, Gini split
search, tree traversal) exist twice: numba @njit loops and vectorized numpy.
numba wins on the loop-heavy kernels; set VERGEKIT_NO_NUMBA=1 to force the
numpy path (or to run on an interpreter where numba is not installed).
benchmarks/kernel_bench.py compares the two.
"""
from __future__ import annotations

import os

_flag = os.environ.get("VERGEKIT_NO_NUMBA", "").strip()
NUMBA_REQUESTED = _flag in ("", "0")

if NUMBA_REQUESTED:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        from . import _kernels_numpy as _impl

        BACKEND = "numpy"
else:
    from . import _kernels_numpy as _impl

    BACKEND = "numpy"

peak_scan = _impl.peak_scan
haar_detail_energy = _impl.haar_detail_energy
window_stats = _impl.window_stats
gini_split = _impl.gini_split
tree_apply = _impl.tree_apply

__all__ = [
    "BACKEND",
    "peak_scan",
    "haar_detail_energy",
    "window_stats",
    "gini_split",
    "tree_apply",
]
