import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toplayer.complex import (
    DegenerateInputError,
    SimplicialComplex,
    betti_oracle,
    boundary_faces,
    boundary_matrix,
    build_clique_complex,
    build_freudenthal_grid,
    delaunay_2d,
)


def test_boundary_faces_order():
    assert boundary_faces((0, 1, 2)) == [(1, 2), (0, 2), (0, 1)]
    assert boundary_faces((3, 7)) == [(7,), (3,)]
    assert boundary_faces((5,)) == []


def test_complex_closes_and_sorts():
    cx = SimplicialComplex([(0, 1, 2)])
    assert cx.simplices == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
    assert cx.count(0) == 3 and cx.count(1) == 3 and cx.count(2) == 1
    assert list(cx.face_indices(6)) == [cx.index[(1, 2)], cx.index[(0, 2)], cx.index[(0, 1)]]


def test_unclosed_input_rejected():
    with pytest.raises(ValueError):
        SimplicialComplex([(0,), (1,), (0, 1, 2)], close=False)
    with pytest.raises(ValueError):
        SimplicialComplex([(1, 0)])


@pytest.mark.parametrize("rows,cols,v,e,t", [(2, 2, 4, 5, 2), (3, 3, 9, 16, 8), (1, 5, 5, 4, 0)])
def test_freudenthal_counts(rows, cols, v, e, t):
    cx = build_freudenthal_grid(rows, cols)
    assert (cx.count(0), cx.count(1), cx.count(2)) == (v, e, t)
    if t:
        assert cx.euler_characteristic() == 1


def test_freudenthal_diagonal_direction():
    cx = build_freudenthal_grid(2, 2)
    # vertex (i, j) has index i * cols + j; the diagonal joins (0,0) and (1,1)
    assert (0, 3) in cx and (1, 2) not in cx


def test_clique_complex_counts():
    assert build_clique_complex(4, 1).count(1) == 6
    cx = build_clique_complex(4, 2)
    assert cx.count(2) == 4
    assert len(build_clique_complex(1, 0)) == 1


def test_betti_small_cases():
    hollow = SimplicialComplex([(0, 1), (1, 2), (0, 2)])
    assert betti_oracle(hollow, 0) == 1 and betti_oracle(hollow, 1) == 1
    full = SimplicialComplex([(0, 1, 2)])
    assert betti_oracle(full, 0) == 1 and betti_oracle(full, 1) == 0
    assert betti_oracle(SimplicialComplex([(0,), (1,)]), 0) == 2


def test_boundary_of_boundary_is_zero():
    cx = build_clique_complex(5, 3)
    for k in (2, 3):
        prod = boundary_matrix(cx, k - 1).astype(int) @ boundary_matrix(cx, k).astype(int)
        assert not np.any(prod % 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5))
def test_grid_is_contractible(rows, cols):
    cx = build_freudenthal_grid(rows, cols)
    assert betti_oracle(cx, 0) == 1
    assert betti_oracle(cx, 1) == 0
    assert cx.euler_characteristic() == 1


def _circumcircle_empty(points, tri):
    a, b, c = points[list(tri)]
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
    centre = np.array([ux, uy])
    r = np.linalg.norm(a - centre)
    others = np.delete(points, list(tri), axis=0)
    return np.all(np.linalg.norm(others - centre, axis=1) >= r * (1 - 1e-9))


def test_delaunay_small():
    cx = delaunay_2d([[0, 0], [1, 0], [0, 1]])
    assert (cx.count(0), cx.count(1), cx.count(2)) == (3, 3, 1)
    cx = delaunay_2d([[0, 0], [4, 0], [0, 4], [1, 1]])
    assert cx.count(2) == 3


@pytest.mark.parametrize("seed", range(5))
def test_delaunay_empty_circumcircle(seed):
    pts = np.random.default_rng(seed).random((20, 2))
    cx = delaunay_2d(pts)
    tris = cx.vertex_array(2)
    assert len(tris) > 0
    assert all(_circumcircle_empty(pts, t) for t in tris)
    # a triangulation of a point set in general position is a disk
    assert betti_oracle(cx, 0) == 1 and betti_oracle(cx, 1) == 0


def test_delaunay_rejects_collinear():
    with pytest.raises(DegenerateInputError):
        delaunay_2d([[0, 0], [1, 1], [2, 2], [3, 3]])


def test_delaunay_duplicate_points_stay_connected():
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 0]], dtype=float)
    cx = delaunay_2d(pts)
    assert cx.n_vertices == 4
    assert betti_oracle(cx, 0) == 1
