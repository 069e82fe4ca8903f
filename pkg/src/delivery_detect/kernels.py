"""Backend selection for the per-pixel hot loops.

The compiled Cython kernels are used when they were built; otherwise the
numpy/scipy fallback is used. Set ``DELIVERY_DETECT_PURE_PYTHON=1`` to force
the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
_mog_update = _fallback.mog_update
_label8 = _fallback.label8

if os.environ.get("DELIVERY_DETECT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ext import ccl as _ccl
        from ._ext import mog as _mog
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        _mog_update = _mog.mog_update
        _label8 = _ccl.label8


def mog_update(means, variances, weights, frame, rho, bg_threshold, gate,
               var_init, var_floor, w_init, backend=None):
    """Update the mixture arrays in place and return the uint8 foreground mask.

    ``means``, ``variances`` and ``weights`` are C-contiguous float64 arrays of
    shape (H, W, K); ``frame`` is a C-contiguous float64 (H, W) array.
    """
    fn = _pick(backend, _mog_update, _fallback.mog_update)
    return fn(means, variances, weights, frame, rho, bg_threshold, gate,
              var_init, var_floor, w_init)


def label8(mask, backend=None):
    """8-connected labelling of a C-contiguous uint8 mask -> (labels, count)."""
    fn = _pick(backend, _label8, _fallback.label8)
    return fn(mask)


def _pick(backend, compiled, fallback):
    if backend is None:
        return compiled
    if backend == "python":
        return fallback
    if backend == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {backend!r}")
