"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` fallback.  Setting ``BRATTELI_METRIC_PURE=1``
forces the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("BRATTELI_METRIC_PURE", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
transport_float = _impl.transport_float
level_step = _impl.level_step
