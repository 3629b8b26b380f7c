"""Kernel backend selection.

The compiled extension is preferred when available; the pure-numpy fallback
is used otherwise. Both produce bitwise-identical results, so the choice only
affects speed. Set ``VERBTRAJ_BACKEND=python`` or ``=cython`` to force one
(the latter raises if the extension was not built).
"""

from __future__ import annotations

import os

_choice = os.environ.get("VERBTRAJ_BACKEND", "auto").lower()
if _choice not in ("auto", "python", "cython"):
    raise RuntimeError(f"VERBTRAJ_BACKEND must be auto|python|cython, got {_choice!r}")

if _choice == "python":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "cython":
            raise
        from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND_NAME: str = kernels.NAME

im2col = kernels.im2col
col2im = kernels.col2im
maxpool2 = kernels.maxpool2
maxpool2_backward = kernels.maxpool2_backward
rasterize_triangles = kernels.rasterize_triangles
