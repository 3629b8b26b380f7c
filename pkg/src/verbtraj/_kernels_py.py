"""Pure-numpy implementations of the hot kernels.

This module is the fallback twin of the compiled ``_kernels_cy`` extension.
Both backends must produce bitwise-identical outputs: every arithmetic
expression here is written in the same order as its Cython counterpart, and
scatter/accumulate loops follow the same traversal order. Keep the two files
in sync when changing either.

Array layout conventions:
  * activations are channels-last, C-contiguous float64: (B, H, W, C)
  * ``im2col`` rows are ordered ((b*OH + oh)*OW + ow), columns ((kh*KW + kw)*C + c)
  * pooling windows are 2x2, stride 2; odd trailing rows/columns are dropped
  * rasterization takes screen-space vertices with pixel centers at i + 0.5
    and an inverse-depth value per vertex (larger = closer to the camera)
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

NAME = "python"


def im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Extract all valid kh x kw patches of (B, H, W, C) into a 2-D matrix."""
    b, h, w, c = x.shape
    oh, ow = h - kh + 1, w - kw + 1
    v = sliding_window_view(x, (kh, kw), axis=(1, 2))  # (B, OH, OW, C, kh, kw)
    return np.ascontiguousarray(v.transpose(0, 1, 2, 4, 5, 3)).reshape(
        b * oh * ow, kh * kw * c
    )


def col2im(dcols: np.ndarray, b: int, h: int, w: int, c: int, kh: int, kw: int) -> np.ndarray:
    """Scatter-add patch gradients back to the (B, H, W, C) input gradient."""
    oh, ow = h - kh + 1, w - kw + 1
    d6 = dcols.reshape(b, oh, ow, kh, kw, c)
    dx = np.zeros((b, h, w, c), dtype=np.float64)
    for p in range(kh):
        for q in range(kw):
            dx[:, p : p + oh, q : q + ow, :] += d6[:, :, :, p, q, :]
    return dx


def maxpool2(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2/stride-2 max pooling; returns (pooled, argmax index in 0..3).

    The index encodes the in-window position (dy*2 + dx); ties resolve to the
    first maximum in (dy, dx) scan order.
    """
    b, h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    v = np.ascontiguousarray(
        x[:, : h2 * 2, : w2 * 2, :]
        .reshape(b, h2, 2, w2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
    ).reshape(b, h2, w2, 4, c)
    idx = v.argmax(axis=3).astype(np.uint8)
    out = np.take_along_axis(v, idx[:, :, :, None, :].astype(np.intp), axis=3)[
        :, :, :, 0, :
    ]
    return np.ascontiguousarray(out), idx


def maxpool2_backward(dout: np.ndarray, idx: np.ndarray, h: int, w: int) -> np.ndarray:
    """Route pooled gradients back to the argmax positions of the input."""
    b, h2, w2, c = dout.shape
    d4 = np.zeros((b, h2, w2, 4, c), dtype=np.float64)
    np.put_along_axis(d4, idx[:, :, :, None, :].astype(np.intp), dout[:, :, :, None, :], axis=3)
    dx = np.zeros((b, h, w, c), dtype=np.float64)
    dx[:, : h2 * 2, : w2 * 2, :] = (
        d4.reshape(b, h2, w2, 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(b, h2 * 2, w2 * 2, c)
    )
    return dx


def rasterize_triangles(
    xy: np.ndarray,
    invz: np.ndarray,
    colors: np.ndarray,
    img: np.ndarray,
    zbuf: np.ndarray,
) -> None:
    """Z-buffered flat-shaded triangle fill, in place.

    xy: (T, 3, 2) screen coordinates, invz: (T, 3) inverse depths,
    colors: (T, 3) RGB per triangle, img: (H, W, 3), zbuf: (H, W).
    A pixel is covered when its center lies inside the triangle (either
    winding); depth is the screen-space linear interpolation of 1/z.
    """
    height, width = zbuf.shape
    for t in range(xy.shape[0]):
        ax, ay = xy[t, 0, 0], xy[t, 0, 1]
        bx, by = xy[t, 1, 0], xy[t, 1, 1]
        cx, cy = xy[t, 2, 0], xy[t, 2, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0 or not math.isfinite(area):
            continue
        i0 = max(0, int(math.ceil(min(ax, bx, cx) - 0.5)))
        i1 = min(width - 1, int(math.floor(max(ax, bx, cx) - 0.5)))
        j0 = max(0, int(math.ceil(min(ay, by, cy) - 0.5)))
        j1 = min(height - 1, int(math.floor(max(ay, by, cy) - 0.5)))
        if i0 > i1 or j0 > j1:
            continue
        px = np.arange(i0, i1 + 1, dtype=np.float64) + 0.5
        py = (np.arange(j0, j1 + 1, dtype=np.float64) + 0.5)[:, None]
        e0 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
        e1 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
        e2 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        inside = ((e0 >= 0.0) & (e1 >= 0.0) & (e2 >= 0.0)) | (
            (e0 <= 0.0) & (e1 <= 0.0) & (e2 <= 0.0)
        )
        if not inside.any():
            continue
        wi = (e0 / area) * invz[t, 0] + (e1 / area) * invz[t, 1] + (e2 / area) * invz[t, 2]
        sub = zbuf[j0 : j1 + 1, i0 : i1 + 1]
        upd = inside & (wi > sub)
        sub[upd] = wi[upd]
        img[j0 : j1 + 1, i0 : i1 + 1][upd] = colors[t]
