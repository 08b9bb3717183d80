import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toplayer.checks import check_wasserstein
from toplayer.complex import SimplicialComplex
from toplayer.diagram import (
    DomainError,
    LossSpec,
    LossTerm,
    _term,
    parse_objective,
    polynomial_loss,
    wasserstein,
    wasserstein_brute_force,
)
from toplayer.filtration import flag, lower_star
from toplayer.persistence import compute_persistence


def test_spec_parse_and_format():
    s = LossSpec.parse("E(2,0,2;PD0)")
    assert s == LossSpec(2, 0, 2, 0)
    assert str(s) == "E(2,0,2;PD0)"
    assert LossSpec.parse(" E( 1.5 , 0 , 1 ; PD_1 ) ") == LossSpec(1.5, 0, 1, 1)
    for bad in ("E(2,0,2)", "E(2,0,0;PD0)", "F(1,0,1;PD0)", "E(-1,0,1;PD0)"):
        with pytest.raises(ValueError):
            LossSpec.parse(bad)


def test_objective_parse():
    terms = parse_objective("-E(2,1,1;PD1) + E(2,0,2;PD0)*0.5")
    assert terms == [LossTerm(LossSpec(2, 1, 1, 1), -1.0, 1.0), LossTerm(LossSpec(2, 0, 2, 0), 1.0, 0.5)]
    assert parse_objective("3*E(1,0,1;PD0)")[0].coefficient == 3.0
    with pytest.raises(ValueError):
        parse_objective("E(1,0,1;PD0) E(1,0,1;PD0)")
    with pytest.raises(ValueError):
        parse_objective("")


def _edge_diagram():
    # PD0 = {(0, inf), (0, 2), (0, 1)} from a path with edge lengths 2 and 1
    cx = SimplicialComplex([(0, 1), (1, 2)])
    return compute_persistence(flag(cx, [2.0, 1.0]), 0)


def test_essential_skipped_at_index_one():
    val, g = polynomial_loss(_edge_diagram(), LossSpec(1, 0, 2, 0))
    assert val == 3.0
    assert len(g.pairs) == 2


def test_empty_diagram_loss():
    cx = SimplicialComplex([(0,)])
    dgm = compute_persistence(lower_star(cx, [0.0]), 1)
    assert polynomial_loss(dgm, LossSpec(2, 1, 1, 1))[0] == 0.0


def test_single_pair_derivatives():
    v, db, dd = _term(1.0, 3.0, 2, 1)
    assert (v, db, dd) == (8.0, -6.0, 10.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 3), st.integers(0, 3))
def test_term_matches_finite_differences(b, d, p, q):
    if abs(d - b) < 1e-3 or (q and abs(b + d) < 1e-3):
        return
    h = 1e-6
    v, db, dd = _term(b, d, p, q)
    fd_b = (_term(b + h, d, p, q)[0] - _term(b - h, d, p, q)[0]) / (2 * h)
    fd_d = (_term(b, d + h, p, q)[0] - _term(b, d - h, p, q)[0]) / (2 * h)
    assert db == pytest.approx(fd_b, rel=1e-5, abs=1e-6)
    assert dd == pytest.approx(fd_d, rel=1e-5, abs=1e-6)


def test_fractional_q_of_negative_midpoint():
    with pytest.raises(DomainError):
        _term(-3.0, -1.0, 1, 0.5)


def test_wasserstein_examples():
    assert wasserstein([[0, 2]], np.zeros((0, 2))) == pytest.approx(math.sqrt(2))
    assert wasserstein([[0, 4]], [[0, 2]]) == pytest.approx(2.0)
    d = np.array([[0.1, 0.5], [0.2, 0.9]])
    assert wasserstein(d, d) == 0.0


def test_wasserstein_matching_output():
    dist, pairs = wasserstein([[0, 4]], [[0, 2]], matching=True)
    assert pairs == [(0, 0)]


def test_wasserstein_essential_modes():
    a = np.array([[0.0, 1.0], [0.0, np.inf]])
    b = np.array([[0.0, 1.0]])
    assert wasserstein(a, b) == 0.0
    assert wasserstein(a, b, essential="cap", cap=3.0) == pytest.approx(3 / math.sqrt(2))
    with pytest.raises(ValueError):
        wasserstein(a, b, strict=True)


def test_wasserstein_against_brute_force():
    r = check_wasserstein(60, seed=21)
    assert r.passed, r.failures


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=4),
       st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=4))
def test_wasserstein_linf_brute_force(a, b):
    a = np.array([(x, x + y) for x, y in a]).reshape(-1, 2)
    b = np.array([(x, x + y) for x, y in b]).reshape(-1, 2)
    assert wasserstein(a, b, 2, ground="linf") == pytest.approx(wasserstein_brute_force(a, b, 2, "linf"), abs=1e-9)
