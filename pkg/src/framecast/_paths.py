"""Kernel selection: compiled path enumeration with pure-Python fallback.

Set FRAMECAST_PURE=1 to force the Python kernel (used by the benchmark and
to exercise both implementations in tests).
"""

from __future__ import annotations

import os

from . import _pathspy

if os.environ.get("FRAMECAST_PURE"):
    enumerate_simple_paths = _pathspy.enumerate_simple_paths
    KERNEL = "python"
else:
    try:
        from . import _pathscy

        enumerate_simple_paths = _pathscy.enumerate_simple_paths
        KERNEL = "cython"
    except ImportError:
        enumerate_simple_paths = _pathspy.enumerate_simple_paths
        KERNEL = "python"

__all__ = ["enumerate_simple_paths", "KERNEL"]
