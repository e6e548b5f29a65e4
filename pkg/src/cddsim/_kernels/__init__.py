"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set ``CDDSIM_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
for debugging); the active choice is exposed as ``KERNEL_NAME``.
"""

import os

from . import python_kernel

if os.environ.get("CDDSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = python_kernel
else:
    try:
        from . import _cykernel as _impl
    except ImportError:
        _impl = python_kernel

KERNEL_NAME = _impl.KERNEL_NAME
run_trajectory = _impl.run_trajectory

__all__ = ["KERNEL_NAME", "run_trajectory", "python_kernel"]
