"""Kernel dispatch: compiled Cython core if available, numpy fallback otherwise.

Set ``WFPLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"

if os.environ.get("WFPLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

neumaier_sum = _impl.neumaier_sum
log_sum_exp = _impl.log_sum_exp
interp2_batch = _impl.interp2_batch
theta_direct = _impl.theta_direct

INTERP_KINDS = {"cubic": 0, "lagrange4": 1}

__all__ = [
    "BACKEND",
    "INTERP_KINDS",
    "interp2_batch",
    "log_sum_exp",
    "neumaier_sum",
    "theta_direct",
]
