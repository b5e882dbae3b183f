"""Landmark-based face morphing.

The blended landmark set is triangulated, each triangle of both sources is
affinely warped onto it with bilinear sampling, and the two warps are mixed
with weights ``1 - alpha`` and ``alpha``.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from ..core import ImageBuffer, InputError, LandmarkSet
from . import warp as _warp
from .delaunay import TriangleMesh, boundary_points, delaunay

__all__ = [
    "MorphParams",
    "MorphQuality",
    "TriangleMesh",
    "blend_landmarks",
    "boundary_points",
    "build_mesh",
    "delaunay",
    "morph",
    "warp_blend",
]

log = logging.getLogger(__name__)

# Blend weights are snapped to this dyadic grid so that w and 1 - w are both
# exact; that keeps (a, b, alpha) and (b, a, 1 - alpha) bit-identical.
WEIGHT_GRID = 2 ** 20
DEGENERATE_AREA = 1e-9


@dataclass(frozen=True)
class MorphParams:
    alpha: float = 0.5
    boundary_augmentation: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must lie in [0, 1], got {self.alpha}")

    def weights(self) -> Tuple[float, float]:
        q = round(self.alpha * WEIGHT_GRID)
        return (WEIGHT_GRID - q) / WEIGHT_GRID, q / WEIGHT_GRID


@dataclass(frozen=True)
class MorphQuality:
    triangles: int
    degenerate_triangles: int
    filled_pixels: int
    uncovered_pixels: int


def _blend_points(a: np.ndarray, b: np.ndarray, wa: float, wb: float) -> np.ndarray:
    return wa * a + wb * b


def blend_landmarks(a: LandmarkSet, b: LandmarkSet, alpha: float) -> LandmarkSet:
    if a.size != b.size:
        raise InputError(f"landmark canvases differ: {a.size} vs {b.size}")
    if alpha == 0.0:
        return a
    if alpha == 1.0:
        return b
    wa, wb = MorphParams(alpha).weights()
    return LandmarkSet(_blend_points(a.points, b.points, wa, wb), a.image_width, a.image_height)


def build_mesh(landmarks: LandmarkSet, boundary_augmentation: bool = True) -> TriangleMesh:
    extra = boundary_points(landmarks.image_width, landmarks.image_height) if boundary_augmentation else None
    return delaunay(landmarks.points, extra)


def _row_bands(height: int, jobs: int):
    jobs = max(1, min(jobs, height))
    edges = np.linspace(0, height, jobs + 1).round().astype(int)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(jobs) if edges[i + 1] > edges[i]]


def morph(
    image_a: ImageBuffer,
    lm_a: LandmarkSet,
    image_b: ImageBuffer,
    lm_b: LandmarkSet,
    params: Optional[MorphParams] = None,
    jobs: int = 1,
):
    """Return ``(image, mesh, quality)`` for a landmark morph of ``a`` and ``b``."""
    params = params or MorphParams()
    if (image_a.width, image_a.height) != (image_b.width, image_b.height):
        raise InputError("source images must share one canvas size")
    if lm_a.size != (image_a.width, image_a.height) or lm_b.size != (image_b.width, image_b.height):
        raise InputError("landmark canvas does not match its image")
    width, height = image_a.width, image_a.height
    wa, wb = params.weights()

    blended = _blend_points(lm_a.points, lm_b.points, wa, wb)
    src_a, src_b = lm_a.points, lm_b.points
    if params.boundary_augmentation:
        border = boundary_points(width, height)
        blended = np.vstack([blended, border])
        src_a = np.vstack([src_a, border])
        src_b = np.vstack([src_b, border])
    mesh = delaunay(blended)

    tris = mesh.triangles
    dst_xy = mesh.vertices[tris]
    a_xy = src_a[tris]
    b_xy = src_b[tris]
    skip = (_area(a_xy) < DEGENERATE_AREA) | (_area(b_xy) < DEGENERATE_AREA)
    if skip.any():
        warnings.warn(f"{int(skip.sum())} degenerate source triangle(s) skipped", stacklevel=2)
    aff_a = _warp.affine_from_triangles(dst_xy, a_xy)
    aff_b = _warp.affine_from_triangles(dst_xy, b_xy)

    edges = _warp.edge_params(dst_xy)
    bboxes = _warp.triangle_bboxes(dst_xy, height, width)
    owner = np.full((height, width), -1, dtype=np.int64)
    out = np.zeros((height, width, 3), dtype=np.float64)
    written = np.zeros((height, width), dtype=np.bool_)
    img_a = image_a.pixels.astype(np.float64)
    img_b = image_b.pixels.astype(np.float64)

    def run(band):
        r0, r1 = band
        _warp.rasterize(edges, bboxes, owner, r0, r1)
        _warp.warp(img_a, img_b, owner, skip, aff_a, aff_b, wa, wb, out, written, r0, r1)

    bands = _row_bands(height, jobs)
    if len(bands) == 1:
        run(bands[0])
    else:
        with ThreadPoolExecutor(max_workers=len(bands)) as pool:
            list(pool.map(run, bands))

    uncovered = owner < 0
    needs_fill = (~written) & ~uncovered
    filled = int(needs_fill.sum())
    if filled:
        if written.any():
            _, (iy, ix) = ndimage.distance_transform_edt(~written, return_indices=True)
            out[needs_fill] = out[iy[needs_fill], ix[needs_fill]]
        log.info("filled %d pixels of degenerate triangles from neighbours", filled)
    quality = MorphQuality(len(tris), int(skip.sum()), filled, int(uncovered.sum()))
    pixels = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return ImageBuffer(pixels, ppi=image_a.ppi), mesh, quality


def _area(tri_xy):
    a, b, c = tri_xy[:, 0], tri_xy[:, 1], tri_xy[:, 2]
    return 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def warp_blend(
    image_a: ImageBuffer,
    lm_a: LandmarkSet,
    image_b: ImageBuffer,
    lm_b: LandmarkSet,
    params: Optional[MorphParams] = None,
    jobs: int = 1,
) -> ImageBuffer:
    return morph(image_a, lm_a, image_b, lm_b, params, jobs)[0]
