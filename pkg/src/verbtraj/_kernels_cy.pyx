# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled implementations of the hot kernels.

Twin of ``_kernels_py``; see that module for the layout contract. The two
backends must stay bitwise-identical: arithmetic expression order and
accumulate/scatter traversal order here mirror the numpy versions exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor, isfinite

cnp.import_array()

NAME = "cython"


def im2col(cnp.ndarray[cnp.float64_t, ndim=4] x, int kh, int kw):
    cdef Py_ssize_t b = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t oh = h - kh + 1, ow = w - kw + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cols = np.empty(
        (b * oh * ow, kh * kw * c), dtype=np.float64
    )
    cdef double[:, :, :, ::1] xv = x
    cdef double[:, ::1] cv = cols
    cdef Py_ssize_t bi, i, j, p, q, k, row, col0
    for bi in range(b):
        for i in range(oh):
            for j in range(ow):
                row = (bi * oh + i) * ow + j
                for p in range(kh):
                    for q in range(kw):
                        col0 = (p * kw + q) * c
                        for k in range(c):
                            cv[row, col0 + k] = xv[bi, i + p, j + q, k]
    return cols


def col2im(cnp.ndarray[cnp.float64_t, ndim=2] dcols,
           int b, int h, int w, int c, int kh, int kw):
    cdef Py_ssize_t oh = h - kh + 1, ow = w - kw + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=4] dx = np.zeros((b, h, w, c), dtype=np.float64)
    cdef double[:, ::1] dv = dcols
    cdef double[:, :, :, ::1] xv = dx
    cdef Py_ssize_t bi, i, j, p, q, k, row, col0
    # (p, q)-outer accumulation order matches the slice-adds of the numpy twin
    for p in range(kh):
        for q in range(kw):
            col0 = (p * kw + q) * c
            for bi in range(b):
                for i in range(oh):
                    for j in range(ow):
                        row = (bi * oh + i) * ow + j
                        for k in range(c):
                            xv[bi, i + p, j + q, k] += dv[row, col0 + k]
    return dx


def maxpool2(cnp.ndarray[cnp.float64_t, ndim=4] x):
    cdef Py_ssize_t b = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t h2 = h // 2, w2 = w // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=4] out = np.empty((b, h2, w2, c), dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=4] idx = np.empty((b, h2, w2, c), dtype=np.uint8)
    cdef double[:, :, :, ::1] xv = x
    cdef double[:, :, :, ::1] ov = out
    cdef unsigned char[:, :, :, ::1] iv = idx
    cdef Py_ssize_t bi, i, j, k
    cdef double v0, v1, v2, v3, best
    cdef unsigned char kbest
    for bi in range(b):
        for i in range(h2):
            for j in range(w2):
                for k in range(c):
                    v0 = xv[bi, 2 * i, 2 * j, k]
                    v1 = xv[bi, 2 * i, 2 * j + 1, k]
                    v2 = xv[bi, 2 * i + 1, 2 * j, k]
                    v3 = xv[bi, 2 * i + 1, 2 * j + 1, k]
                    best = v0
                    kbest = 0
                    if v1 > best:
                        best = v1
                        kbest = 1
                    if v2 > best:
                        best = v2
                        kbest = 2
                    if v3 > best:
                        best = v3
                        kbest = 3
                    ov[bi, i, j, k] = best
                    iv[bi, i, j, k] = kbest
    return out, idx


def maxpool2_backward(cnp.ndarray[cnp.float64_t, ndim=4] dout,
                      cnp.ndarray[cnp.uint8_t, ndim=4] idx, int h, int w):
    cdef Py_ssize_t b = dout.shape[0], h2 = dout.shape[1], w2 = dout.shape[2], c = dout.shape[3]
    cdef cnp.ndarray[cnp.float64_t, ndim=4] dx = np.zeros((b, h, w, c), dtype=np.float64)
    cdef double[:, :, :, ::1] dv = dout
    cdef double[:, :, :, ::1] xv = dx
    cdef unsigned char[:, :, :, ::1] iv = idx
    cdef Py_ssize_t bi, i, j, k
    cdef unsigned char kk
    for bi in range(b):
        for i in range(h2):
            for j in range(w2):
                for k in range(c):
                    kk = iv[bi, i, j, k]
                    xv[bi, 2 * i + (kk >> 1), 2 * j + (kk & 1), k] = dv[bi, i, j, k]
    return dx


def rasterize_triangles(cnp.ndarray[cnp.float64_t, ndim=3] xy,
                        cnp.ndarray[cnp.float64_t, ndim=2] invz,
                        cnp.ndarray[cnp.float64_t, ndim=2] colors,
                        cnp.ndarray[cnp.float64_t, ndim=3] img,
                        cnp.ndarray[cnp.float64_t, ndim=2] zbuf):
    cdef Py_ssize_t height = zbuf.shape[0], width = zbuf.shape[1]
    cdef double[:, :, ::1] xyv = xy
    cdef double[:, ::1] wv = invz
    cdef double[:, ::1] colv = colors
    cdef double[:, :, ::1] iv = img
    cdef double[:, ::1] zv = zbuf
    cdef Py_ssize_t t, i, j, i0, i1, j0, j1
    cdef double ax, ay, bx, by, cx, cy, area, xmin, xmax, ymin, ymax
    cdef double px, py, e0, e1, e2, wi
    cdef bint inside
    for t in range(xy.shape[0]):
        ax = xyv[t, 0, 0]; ay = xyv[t, 0, 1]
        bx = xyv[t, 1, 0]; by = xyv[t, 1, 1]
        cx = xyv[t, 2, 0]; cy = xyv[t, 2, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0 or not isfinite(area):
            continue
        xmin = min(ax, min(bx, cx)); xmax = max(ax, max(bx, cx))
        ymin = min(ay, min(by, cy)); ymax = max(ay, max(by, cy))
        # clamp in double space before the integer cast; screen coordinates of
        # nearly-degenerate projections can exceed the Py_ssize_t range
        i0 = <Py_ssize_t>max(0.0, min(<double>width, ceil(xmin - 0.5)))
        i1 = <Py_ssize_t>min(<double>(width - 1), max(-1.0, floor(xmax - 0.5)))
        j0 = <Py_ssize_t>max(0.0, min(<double>height, ceil(ymin - 0.5)))
        j1 = <Py_ssize_t>min(<double>(height - 1), max(-1.0, floor(ymax - 0.5)))
        if i0 > i1 or j0 > j1:
            continue
        for j in range(j0, j1 + 1):
            py = j + 0.5
            for i in range(i0, i1 + 1):
                px = i + 0.5
                e0 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
                e1 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
                e2 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
                inside = (e0 >= 0.0 and e1 >= 0.0 and e2 >= 0.0) or (
                    e0 <= 0.0 and e1 <= 0.0 and e2 <= 0.0
                )
                if not inside:
                    continue
                wi = (e0 / area) * wv[t, 0] + (e1 / area) * wv[t, 1] + (e2 / area) * wv[t, 2]
                if wi > zv[j, i]:
                    zv[j, i] = wi
                    iv[j, i, 0] = colv[t, 0]
                    iv[j, i, 1] = colv[t, 1]
                    iv[j, i, 2] = colv[t, 2]
