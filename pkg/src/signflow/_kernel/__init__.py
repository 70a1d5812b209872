"""Kernel backend selection.

The compiled extension is preferred when present; set ``SIGNFLOW_PURE=1``
to force the interpreted backend (useful for debugging and benchmarks).
Both backends expose the same class interface; see ``pure.PyKernel``.
"""

from __future__ import annotations

import os

from .pure import (
    STATUS_BLOWUP,
    STATUS_DOMAIN_EXIT,
    STATUS_FAILED,
    STATUS_OK,
    PyKernel,
)
from .tape import SystemTape, compile_system

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "make_kernel",
    "compile_system",
    "SystemTape",
    "STATUS_OK",
    "STATUS_BLOWUP",
    "STATUS_DOMAIN_EXIT",
    "STATUS_FAILED",
]

try:
    from . import _fast  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:
    _fast = None
    HAVE_COMPILED = False

_FORCE_PURE = os.environ.get("SIGNFLOW_PURE") == "1"
BACKEND = "compiled" if (HAVE_COMPILED and not _FORCE_PURE) else "python"


def make_kernel(tape: SystemTape):
    """Instantiate the selected backend for a compiled system tape."""
    if BACKEND == "compiled":
        return _fast.CKernel(tape)
    return PyKernel(tape)
