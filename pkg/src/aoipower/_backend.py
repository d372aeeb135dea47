"""Kernel backend chosen at import time.

The compiled module is used when it imports cleanly; set
``AOIPOWER_BACKEND=python`` to force the pure-Python kernels.
"""
from __future__ import annotations

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)


def _select():
    wanted = os.environ.get("AOIPOWER_BACKEND", "auto").lower()
    if wanted == "python":
        return _pykernels
    try:
        from . import _ckernels
    except ImportError:
        if wanted == "cython":
            raise
        log.debug("compiled kernels unavailable, using pure Python")
        return _pykernels
    return _ckernels


kernels = _select()
BACKEND = kernels.BACKEND


def get(name: str):
    """Return the kernel module for ``name`` ('python' or 'cython')."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
