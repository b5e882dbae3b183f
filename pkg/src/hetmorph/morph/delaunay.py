"""Deterministic Delaunay triangulation.

qhull provides the initial triangulation; a Lawson flip pass then removes
any residual illegal edges and resolves cocircular ties canonically: for a
quadrilateral whose four vertices are cocircular, the diagonal incident to
the lowest vertex index is kept. For a cocircular polygon this yields the
fan from its lowest-index vertex, independent of qhull's internal choices.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import Delaunay, QhullError

from ..core import InputError

log = logging.getLogger(__name__)

INCIRCLE_EPS = 1e-12
# Normalizing to the unit box costs a few ulps, so exactly collinear input
# can come back with a tiny nonzero orientation; treat those as flat.
ORIENT_EPS = 1e-14


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 2) float64
    triangles: np.ndarray  # (T, 3) int64, counter-clockwise in (x, y), lowest index first

    def to_json(self) -> dict:
        return {
            "vertices": [[float(x), float(y)] for x, y in self.vertices],
            "triangles": [[int(i) for i in t] for t in self.triangles],
        }


def _orient(p, a, b, c):
    return (p[b, 0] - p[a, 0]) * (p[c, 1] - p[a, 1]) - (p[b, 1] - p[a, 1]) * (p[c, 0] - p[a, 0])


def incircle(p, a, b, c, d):
    """Positive when ``d`` lies inside the circumcircle of ccw triangle abc."""
    adx, ady = p[a, 0] - p[d, 0], p[a, 1] - p[d, 1]
    bdx, bdy = p[b, 0] - p[d, 0], p[b, 1] - p[d, 1]
    cdx, cdy = p[c, 0] - p[d, 0], p[c, 1] - p[d, 1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (
        adx * (bdy * cd - bd * cdy)
        - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx)
    )


def _canonical(p, tri):
    a, b, c = (int(v) for v in tri)
    if _orient(p, a, b, c) < 0:
        b, c = c, b
    k = min(range(3), key=lambda i: (a, b, c)[i])
    t = (a, b, c)
    return t[k:] + t[:k]


def _normalize(points):
    lo = points.min(axis=0)
    span = float((points.max(axis=0) - lo).max())
    return (points - lo) / (span if span > 0 else 1.0)


def _legalize(p, tris, max_rounds=None):
    """Lawson flips until every interior edge is legal and ties are canonical."""
    tris = [list(_canonical(p, t)) for t in tris]
    n_flips = 0
    limit = max_rounds or 20 * len(tris) * len(tris) + 100
    while True:
        edges = {}
        for ti, t in enumerate(tris):
            for k in range(3):
                e = (min(t[k], t[(k + 1) % 3]), max(t[k], t[(k + 1) % 3]))
                edges.setdefault(e, []).append(ti)
        flipped = False
        for e in sorted(edges):
            owners = edges[e]
            if len(owners) != 2:
                continue
            t1, t2 = tris[owners[0]], tris[owners[1]]
            a, b = e
            c = next(v for v in t1 if v != a and v != b)
            d = next(v for v in t2 if v != a and v != b)
            ta = _canonical(p, (a, b, c))
            ic = incircle(p, ta[0], ta[1], ta[2], d)
            if ic > INCIRCLE_EPS:
                flip = True
            elif ic >= -INCIRCLE_EPS:
                flip = min(a, b, c, d) in (c, d)
            else:
                flip = False
            if not flip:
                continue
            # the new diagonal must split a convex quad
            oa, ob = _orient(p, c, d, a), _orient(p, c, d, b)
            if not ((oa > ORIENT_EPS and ob < -ORIENT_EPS) or (oa < -ORIENT_EPS and ob > ORIENT_EPS)):
                continue
            tris[owners[0]] = list(_canonical(p, (c, d, a)))
            tris[owners[1]] = list(_canonical(p, (c, d, b)))
            n_flips += 1
            flipped = True
            break
        if not flipped:
            return tris, n_flips
        if n_flips > limit:
            raise RuntimeError("Delaunay legalization did not converge")


def delaunay(points, extra_points: Optional[np.ndarray] = None) -> TriangleMesh:
    """Triangulate ``points`` (plus optional ``extra_points`` appended after them).

    Exact duplicate points are dropped with a warning; triangles reference the
    first occurrence. Raises :class:`InputError` for fewer than three distinct
    points or an all-collinear set.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if extra_points is not None:
        pts = np.vstack([pts, np.asarray(extra_points, dtype=np.float64).reshape(-1, 2)])
    if not np.all(np.isfinite(pts)):
        raise InputError("non-finite point coordinate")

    first = {}
    keep = []
    for i, (x, y) in enumerate(pts):
        key = (float(x), float(y))
        if key not in first:
            first[key] = i
            keep.append(i)
    if len(keep) < len(pts):
        warnings.warn(f"dropped {len(pts) - len(keep)} duplicate point(s) before triangulation", stacklevel=2)
    if len(keep) < 3:
        raise InputError(f"need at least 3 distinct points, got {len(keep)}")

    keep = np.array(keep)
    unit = _normalize(pts)
    sub = unit[keep]
    d = sub[1:] - sub[0]
    cross = d[:, 0, None] * d[None, :, 1] - d[:, 1, None] * d[None, :, 0]
    if np.abs(cross).max() <= ORIENT_EPS:
        raise InputError("all points are collinear")

    try:
        qh = Delaunay(sub)
    except QhullError as exc:  # pragma: no cover - collinear sets are caught above
        raise InputError(f"triangulation failed: {exc}") from None
    tris = [tuple(keep[s]) for s in qh.simplices if abs(_orient(unit, *keep[s])) > ORIENT_EPS]
    tris, n_flips = _legalize(unit, tris)
    if n_flips:
        log.debug("delaunay: %d canonicalizing flips", n_flips)
    tris = np.array(sorted(tuple(t) for t in tris), dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(pts, tris)


def boundary_points(width: int, height: int) -> np.ndarray:
    """Four corners and four edge midpoints of the pixel-centre rectangle."""
    x1, y1 = width - 1.0, height - 1.0
    xm, ym = x1 / 2.0, y1 / 2.0
    return np.array(
        [[0.0, 0.0], [xm, 0.0], [x1, 0.0], [x1, ym], [x1, y1], [xm, y1], [0.0, y1], [0.0, ym]]
    )

