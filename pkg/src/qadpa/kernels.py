"""Kernel backend selection.

The compiled extension is used when it imports; setting
``QADPA_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from qadpa import _pykernels

BACKEND = "python"

if not os.environ.get("QADPA_PURE_PYTHON"):
    try:
        from qadpa import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

match_fitness = _impl.match_fitness
clip_chain = _impl.clip_chain

__all__ = ["BACKEND", "clip_chain", "match_fitness"]
