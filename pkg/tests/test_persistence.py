import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toplayer.checks import check_betti, check_union_find, random_complex, random_filtration
from toplayer.complex import SimplicialComplex, build_freudenthal_grid
from toplayer.filtration import from_simplex_values, lower_star, rips_filtration
from toplayer.persistence import compute_persistence, pd0_union_find, reduce


def pts(dgm, k, **kw):
    return sorted((p.birth, p.death) for p in dgm.indexed(k, **kw))


def test_path_example():
    f = lower_star(SimplicialComplex([(0, 1), (1, 2)]), [0.0, 2.0, 1.0])
    for dgm in (reduce(f), pd0_union_find(f), compute_persistence(f, 0)):
        assert pts(dgm, 0, include_zero=True) == [(0.0, np.inf), (1.0, 2.0), (2.0, 2.0)]
        assert pts(dgm, 0) == [(0.0, np.inf), (1.0, 2.0)]


def test_hollow_triangle():
    cx = SimplicialComplex([(0, 1), (1, 2), (0, 2)])
    f = from_simplex_values(cx, [0, 0, 0, 1, 1, 1])
    dgm = reduce(f)
    assert pts(dgm, 0) == [(0.0, 1.0), (0.0, 1.0), (0.0, np.inf)]
    assert pts(dgm, 1) == [(1.0, np.inf)]


def test_filled_triangle():
    cx = SimplicialComplex([(0, 1, 2)])
    dgm = reduce(from_simplex_values(cx, [0, 0, 0, 1, 1, 1, 2]))
    assert pts(dgm, 1) == [(1.0, 2.0)]


def test_isolated_vertices():
    cx = SimplicialComplex([(i,) for i in range(5)])
    f = from_simplex_values(cx, np.arange(5.0))
    assert sum(p.essential for p in pd0_union_find(f)[0]) == 5


def test_constant_field_on_grid():
    f = lower_star(build_freudenthal_grid(4, 4), np.full(16, 3.0))
    dgm = compute_persistence(f, 1)
    assert pts(dgm, 0) == [(3.0, np.inf)]
    assert pts(dgm, 1) == []


def test_essential_first_then_lifetime():
    f = lower_star(SimplicialComplex([(0, 1), (1, 2), (2, 3), (3, 4)]), [0.0, 5.0, 1.0, 3.0, 2.5])
    order = compute_persistence(f, 0).indexed(0)
    assert order[0].essential
    lifetimes = [p.lifetime for p in order[1:]]
    assert lifetimes == sorted(lifetimes, reverse=True)


def test_superlevel_reported_coordinates():
    f = lower_star(SimplicialComplex([(0, 1), (1, 2)]), [1.0, 0.0, 2.0], "superlevel")
    dgm = compute_persistence(f, 0)
    assert pts(dgm, 0) == [(1.0, 0.0), (2.0, -np.inf)]
    assert dgm[0][0].creator == 2  # global max


def test_cap_closes_essential_at_final_simplex():
    f = lower_star(SimplicialComplex([(0, 1), (1, 2)]), [0.0, 2.0, 1.0])
    ess = compute_persistence(f, 0).indexed(0, cap=True)[0]
    assert ess.capped and ess.death == 2.0 and ess.destroyer == f.order[-1]


def test_sweep_matches_betti_oracle():
    betti, part = check_betti(60, seed=11)
    assert betti.passed, betti.failures[:5]
    assert part.passed, part.failures[:5]


def test_union_find_matches_reduction():
    r = check_union_find(100, seed=12)
    assert r.passed, r.failures[:5]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_fast_path_equals_reduction(seed):
    rng = np.random.default_rng(seed)
    f = random_filtration(rng, random_complex(rng))
    a, b = reduce(f), compute_persistence(f, 2)
    for k in range(3):
        ka = sorted((p.creator, p.destroyer or -1) for p in a.indexed(k, include_zero=True))
        kb = sorted((p.creator, p.destroyer or -1) for p in b.indexed(k, include_zero=True))
        assert ka == kb


def test_random_images_against_rips_dim0(rng):
    # lower-star PD0 of a grid equals that of its 1-skeleton
    img = rng.random((6, 6))
    cx = build_freudenthal_grid(6, 6)
    full = compute_persistence(lower_star(cx, img.ravel()), 0)
    one = cx.subcomplex(cx.dims <= 1)
    sk = compute_persistence(lower_star(one, img.ravel()), 0)
    assert pts(full, 0) == pts(sk, 0)


def test_performance_floor(rng):
    cx = build_freudenthal_grid(28, 28)
    t = time.perf_counter()
    compute_persistence(lower_star(cx, rng.random(784)), 1)
    assert time.perf_counter() - t < 1.0
    t = time.perf_counter()
    compute_persistence(rips_filtration(rng.random((300, 2)), 1, threshold=0.15), 1)
    assert time.perf_counter() - t < 10.0
