"""Triangle rasterization and affine warp/blend kernels.

Pixel ``(x, y)`` has its centre at integer coordinates. Each pixel is owned
by exactly one triangle: the lowest-indexed triangle whose closed region
(edge tolerance ``EDGE_EPS`` pixels) contains the centre. Ownership is thus a
min-reduction and independent of evaluation order or tiling.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _accel

EDGE_EPS = 1e-9


def triangle_bboxes(tri_xy, height, width):
    """Integer pixel bounding boxes ``(x0, x1, y0, y1)`` (inclusive) clipped to the canvas."""
    lo = np.floor(tri_xy.min(axis=1) - EDGE_EPS)
    hi = np.ceil(tri_xy.max(axis=1) + EDGE_EPS)
    x0 = np.clip(lo[:, 0], 0, width - 1).astype(np.int64)
    x1 = np.clip(hi[:, 0], 0, width - 1).astype(np.int64)
    y0 = np.clip(lo[:, 1], 0, height - 1).astype(np.int64)
    y1 = np.clip(hi[:, 1], 0, height - 1).astype(np.int64)
    return np.stack([x0, x1, y0, y1], axis=1)


def edge_params(tri_xy):
    """Per-edge line coefficients so that ``nx*x + ny*y + c >= -EDGE_EPS`` means inside.

    Triangles must be counter-clockwise under the ``(x, y)`` orientation test.
    Coefficients are normalized so the value is a signed distance in pixels.
    """
    T = tri_xy.shape[0]
    out = np.empty((T, 3, 3), dtype=np.float64)
    for k in range(3):
        a = tri_xy[:, k]
        b = tri_xy[:, (k + 1) % 3]
        ex = b[:, 0] - a[:, 0]
        ey = b[:, 1] - a[:, 1]
        norm = np.hypot(ex, ey)
        norm[norm == 0] = 1.0
        # cross(b - a, p - a) = ex*(py - ay) - ey*(px - ax)
        out[:, k, 0] = -ey / norm
        out[:, k, 1] = ex / norm
        out[:, k, 2] = (ey * a[:, 0] - ex * a[:, 1]) / norm
    return out


@_accel.njit
def _rasterize_numba(edges, bboxes, owner, row0, row1):
    T = edges.shape[0]
    for t in range(T):
        y_lo = max(bboxes[t, 2], row0)
        y_hi = min(bboxes[t, 3], row1 - 1)
        for y in range(y_lo, y_hi + 1):
            for x in range(bboxes[t, 0], bboxes[t, 1] + 1):
                if owner[y, x] >= 0:
                    continue
                inside = True
                for k in range(3):
                    v = edges[t, k, 0] * x + edges[t, k, 1] * y + edges[t, k, 2]
                    if v < -EDGE_EPS:
                        inside = False
                        break
                if inside:
                    owner[y, x] = t


def _rasterize_numpy(edges, bboxes, owner, row0, row1):
    for t in range(edges.shape[0]):
        y_lo = max(bboxes[t, 2], row0)
        y_hi = min(bboxes[t, 3], row1 - 1)
        if y_hi < y_lo:
            continue
        x_lo, x_hi = bboxes[t, 0], bboxes[t, 1]
        ys, xs = np.mgrid[y_lo : y_hi + 1, x_lo : x_hi + 1]
        xs = xs.astype(np.float64)
        ys = ys.astype(np.float64)
        inside = owner[y_lo : y_hi + 1, x_lo : x_hi + 1] < 0
        for k in range(3):
            v = edges[t, k, 0] * xs + edges[t, k, 1] * ys + edges[t, k, 2]
            inside &= v >= -EDGE_EPS
        owner[y_lo : y_hi + 1, x_lo : x_hi + 1][inside] = t


def rasterize(edges, bboxes, owner, row0, row1):
    """Fill ``owner[row0:row1]`` in place with owning triangle indices (-1 = none)."""
    if _accel.USE_NUMBA:
        _rasterize_numba(edges, bboxes, owner, row0, row1)
    else:
        _rasterize_numpy(edges, bboxes, owner, row0, row1)


@_accel.njit
def _sample_numba(img, x, y):
    h = img.shape[0]
    w = img.shape[1]
    if x < 0.0:
        x = 0.0
    elif x > w - 1.0:
        x = w - 1.0
    if y < 0.0:
        y = 0.0
    elif y > h - 1.0:
        y = h - 1.0
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    out = np.empty(3)
    for c in range(3):
        top = (1.0 - fx) * img[y0, x0, c] + fx * img[y0, x1, c]
        bot = (1.0 - fx) * img[y1, x0, c] + fx * img[y1, x1, c]
        out[c] = (1.0 - fy) * top + fy * bot
    return out


@_accel.njit
def _warp_numba(img_a, img_b, owner, skip, aff_a, aff_b, wa, wb, out, written, row0, row1):
    width = owner.shape[1]
    for y in range(row0, row1):
        for x in range(width):
            t = owner[y, x]
            if t < 0 or skip[t]:
                continue
            xa = aff_a[t, 0, 0] * x + aff_a[t, 0, 1] * y + aff_a[t, 0, 2]
            ya = aff_a[t, 1, 0] * x + aff_a[t, 1, 1] * y + aff_a[t, 1, 2]
            xb = aff_b[t, 0, 0] * x + aff_b[t, 0, 1] * y + aff_b[t, 0, 2]
            yb = aff_b[t, 1, 0] * x + aff_b[t, 1, 1] * y + aff_b[t, 1, 2]
            va = _sample_numba(img_a, xa, ya)
            vb = _sample_numba(img_b, xb, yb)
            for c in range(3):
                out[y, x, c] = wa * va[c] + wb * vb[c]
            written[y, x] = True


def _sample_numpy(img, x, y):
    h, w = img.shape[:2]
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]
    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
    bot = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
    return (1.0 - fy) * top + fy * bot


def _warp_numpy(img_a, img_b, owner, skip, aff_a, aff_b, wa, wb, out, written, row0, row1):
    band = owner[row0:row1]
    live = band >= 0
    live[live] = ~skip[band[live]]
    ys, xs = np.nonzero(live)
    if ys.size == 0:
        return
    t = band[ys, xs]
    ys = ys + row0
    xf = xs.astype(np.float64)
    yf = ys.astype(np.float64)
    xa = aff_a[t, 0, 0] * xf + aff_a[t, 0, 1] * yf + aff_a[t, 0, 2]
    ya = aff_a[t, 1, 0] * xf + aff_a[t, 1, 1] * yf + aff_a[t, 1, 2]
    xb = aff_b[t, 0, 0] * xf + aff_b[t, 0, 1] * yf + aff_b[t, 0, 2]
    yb = aff_b[t, 1, 0] * xf + aff_b[t, 1, 1] * yf + aff_b[t, 1, 2]
    va = _sample_numpy(img_a, xa, ya)
    vb = _sample_numpy(img_b, xb, yb)
    out[ys, xs] = wa * va + wb * vb
    written[ys, xs] = True


def warp(img_a, img_b, owner, skip, aff_a, aff_b, wa, wb, out, written, row0, row1):
    """Warp-and-blend rows ``row0:row1`` into ``out`` (float64, 0..255 scale)."""
    kernel = _warp_numba if _accel.USE_NUMBA else _warp_numpy
    kernel(img_a, img_b, owner, skip, aff_a, aff_b, wa, wb, out, written, row0, row1)


def affine_from_triangles(dst, src):
    """Per-triangle 2x3 matrices mapping ``dst`` vertices onto ``src`` vertices.

    ``dst`` and ``src`` are ``(T, 3, 2)``. ``dst`` triangles must be non-degenerate.
    """
    T = dst.shape[0]
    lhs = np.concatenate([dst, np.ones((T, 3, 1))], axis=2)  # rows [x y 1]
    # lhs @ X = src  ->  X is (3, 2); the affine matrix is X.T
    sol = np.linalg.solve(lhs, src)
    return np.ascontiguousarray(np.transpose(sol, (0, 2, 1)))
