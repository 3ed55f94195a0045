"""Kernel backend selection.

The hot inner loops (pairwise IoU, assignment solve) exist twice: a compiled
Cython extension and a pure-Python mirror. The extension is preferred when it
imported cleanly; set GROUNDTRACK_PURE=1 to force the fallback. Both backends
are bit-identical, so the choice affects speed only (see benchmarks/).
"""

from __future__ import annotations

import os

from . import _pure

_force_pure = os.environ.get("GROUNDTRACK_PURE", "") not in ("", "0")

if not _force_pure:
    try:
        from . import _native as _backend  # type: ignore[attr-defined]
    except ImportError:
        _backend = _pure
else:
    _backend = _pure

IMPLEMENTATION: str = _backend.IMPLEMENTATION
iou_matrix = _backend.iou_matrix
lsap_pair = _backend.lsap_pair


def available_backends() -> list[str]:
    names = ["pure"]
    try:
        from . import _native  # noqa: F401

        names.insert(0, "native")
    except ImportError:
        pass
    return names
