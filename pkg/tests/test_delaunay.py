import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetmorph.core import InputError
from hetmorph.morph import boundary_points, delaunay

from oracles import circumcircle_violations, hull_area, triangles_area


def test_three_points_one_triangle():
    mesh = delaunay([[0, 0], [1, 0], [0, 1]])
    assert mesh.triangles.tolist() == [[0, 1, 2]]


def test_square_tie_break_uses_lowest_index_diagonal():
    # cocircular: the diagonal through vertex 0 is kept
    mesh = delaunay([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert mesh.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]
    # relabelled so that vertex 0 sits on the other diagonal
    mesh = delaunay([[1, 0], [1, 1], [0, 1], [0, 0]])
    assert mesh.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_regular_hexagon_is_fan_from_vertex_zero():
    ang = np.arange(6) * np.pi / 3
    pts = np.column_stack([np.cos(ang), np.sin(ang)])
    mesh = delaunay(pts)
    assert mesh.triangles.tolist() == [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]]


def test_collinear_rejected():
    with pytest.raises(InputError, match="collinear"):
        delaunay([[0, 0], [1, 1], [2, 2], [3, 3]])


def test_duplicates_dropped_with_warning():
    with pytest.warns(UserWarning, match="duplicate"):
        mesh = delaunay([[0, 0], [1, 0], [0, 1], [1, 0]])
    assert mesh.triangles.tolist() == [[0, 1, 2]]
    with pytest.warns(UserWarning), pytest.raises(InputError, match="at least 3"):
        delaunay([[0, 0], [1, 0], [0, 0]])


def test_triangles_are_ccw_and_lowest_first():
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 100, (40, 2))
    mesh = delaunay(pts)
    for a, b, c in mesh.triangles:
        assert a < b and a < c
        cross = (pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1]) - (pts[b, 1] - pts[a, 1]) * (pts[c, 0] - pts[a, 0])
        assert cross > 0


def test_30_random_points_empty_circumcircle():
    rng = np.random.default_rng(30)
    for _ in range(10):
        pts = rng.uniform(0, 200, (30, 2))
        mesh = delaunay(pts)
        assert circumcircle_violations(pts, mesh.triangles, 1e-9) == 0
        assert triangles_area(pts, mesh.triangles) == pytest.approx(hull_area(pts))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 76))
def test_random_sets_property(seed, n):
    rng = np.random.default_rng(seed)
    # integer grid makes cocircular and collinear subsets common
    pts = rng.integers(0, 12, (n, 2)).astype(float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            mesh = delaunay(pts)
        except InputError:
            return
        again = delaunay(pts)
    np.testing.assert_array_equal(mesh.triangles, again.triangles)
    assert circumcircle_violations(pts, mesh.triangles, 1e-9) == 0
    uniq = np.unique(pts, axis=0)
    assert triangles_area(pts, mesh.triangles) == pytest.approx(hull_area(uniq))


def test_boundary_points_cover_rectangle():
    b = boundary_points(160, 192)
    assert b.tolist()[0] == [0.0, 0.0] and [159.0, 191.0] in b.tolist()
    rng = np.random.default_rng(1)
    pts = np.column_stack([rng.uniform(10, 150, 68), rng.uniform(10, 180, 68)])
    mesh = delaunay(pts, b)
    assert triangles_area(mesh.vertices, mesh.triangles) == pytest.approx(159 * 191)


def test_mesh_json_shape():
    doc = delaunay([[0, 0], [1, 0], [0, 1]]).to_json()
    assert doc == {"vertices": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], "triangles": [[0, 1, 2]]}
