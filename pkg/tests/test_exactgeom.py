from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import nnls

from conekit import exactgeom as eg
from conekit.exactgeom import ConeRep, ConvexPolyCone, Polyhedron


def gen_cone(*gens):
    return ConvexPolyCone.from_generators(gens, len(gens[0]))


def in_hull_float(gens, v, tol=1e-9):
    # independent oracle: nonnegative least squares residual
    A = np.array([[float(c) for c in g] for g in gens], dtype=float).T
    _, res = nnls(A, np.array([float(c) for c in v]))
    return res < tol


def satisfies(ineqs, v):
    return all(eg.dot(a, v) <= 0 for a in ineqs)


GRID = [(F(a, 10), F(b, 10)) for a, b in product(range(-20, 21), repeat=2)]


# ---------------------------------------------------------------- dd_convert

def test_orthant_inequalities():
    C = gen_cone((1, 0), (0, 1))
    assert set(C.facets) == {(-1, 0), (0, -1)}
    assert C.eqs == ()


def test_whole_plane_has_no_inequalities():
    C = gen_cone((1, 0), (-1, 0), (0, 1), (0, -1))
    assert C.inequalities == ()
    assert C.is_whole()


def test_wedge_inequalities_against_grid_oracle():
    C = gen_cone((1, 0), (1, 1))
    assert set(C.facets) == {(0, -1), (-1, 1)}
    gens = [(1, 0), (1, 1)]
    for v in GRID:
        assert satisfies(C.inequalities, v) == in_hull_float(gens, v)


def test_round_trip_v_h_v():
    C = gen_cone((1, 0, 0), (1, 1, 0), (0, 1, 1), (1, 2, 1))
    D = ConvexPolyCone.from_inequalities(C.inequalities, 3)
    assert eg.cone_equal(C, D)


# ---------------------------------------------------------------- polar

def test_polar_of_whole_space_is_origin():
    assert eg.polar(ConvexPolyCone.whole(3)).is_zero()


def test_polar_of_halfplane():
    H = ConvexPolyCone.from_inequalities([(0, -1)], 2)
    P = eg.polar(H)
    assert P.rays == ((0, -1),) and P.lineality == ()


def test_polar_of_wedge_brute_force():
    C = gen_cone((1, 0), (1, 1))
    P = eg.polar(C)
    assert eg.cone_equal(P, gen_cone((0, -1), (-1, 1)))
    for g in C.generators:
        for h in P.generators:
            assert eg.dot(g, h) <= 0


# ---------------------------------------------------------------- project

def test_project_inside_is_identity():
    P = Polyhedron.make([(0, -1)], [0])
    assert eg.project(P, (3, 5)) == (3, 5)


def test_project_onto_halfplane():
    P = Polyhedron.make([(0, -1)], [0])
    assert eg.project(P, (0, -1)) == (0, 0)


@pytest.mark.parametrize("x", [(1, 1), (3, -1), (F(1, 2), F(7, 3)), (-2, 5)])
def test_project_matches_closed_form_halfspace(x):
    a, b = (1, 1), 0
    P = Polyhedron.make([a], [b])
    x = eg.vec(x)
    viol = eg.dot(a, x) - b
    want = x if viol <= 0 else eg.sub(x, eg.scale(viol / eg.norm2(a), a))
    assert eg.project(P, x) == want


# ---------------------------------------------------------------- conic_sum / membership

def test_conic_sum_of_two_negative_rays():
    S = eg.conic_sum([gen_cone((0, -1)), gen_cone((-1, 0))])
    assert eg.cone_equal(S, gen_cone((0, -1), (-1, 0)))


def test_conic_sum_single_cone():
    C = gen_cone((1, 2), (3, -1))
    assert eg.cone_equal(eg.conic_sum([C]), C)


def test_conic_sum_drops_redundant_ray():
    S = eg.conic_sum([gen_cone((1, 0)), gen_cone((1, 1)), gen_cone((1, 2))])
    assert set(S.rays) == {(1, 0), (1, 2)}
    for v in GRID:
        assert S.contains(v) == in_hull_float([(1, 0), (1, 1), (1, 2)], v)


def test_membership_equality_pointedness():
    H = ConvexPolyCone.from_inequalities([(0, -1)], 2)
    assert eg.cone_member(H, (5, 0))
    assert eg.cone_equal(gen_cone((1, 0), (0, 1)), gen_cone((0, 1), (1, 0), (1, 1)))
    wedge = gen_cone((1, 0), (1, 1))
    assert eg.is_pointed(wedge) and not eg.is_pointed(H)
    # pointed iff the polar is full-dimensional
    assert eg.polar(wedge).cone_dim == 2 and eg.polar(H).cone_dim == 1


def test_text_round_trip():
    C = gen_cone((1, 0), (1, 1))
    assert eg.cone_equal(eg.from_text(eg.to_text(C), 2), C)


def test_union_membership():
    U = ConeRep.of(gen_cone((1, 0), (-1, 0)), gen_cone((0, 1), (0, -1)))
    assert U.contains((3, 0)) and U.contains((0, -2)) and not U.contains((1, 1))


def test_malformed_dimension_rejected():
    with pytest.raises(eg.MalformedInput):
        ConvexPolyCone.from_generators([(1, 0), (1, 0, 0)], 2)


# ---------------------------------------------------------------- properties

small = st.integers(-3, 3)


@st.composite
def cones(draw, max_dim=4, n=None):
    n = n or draw(st.integers(1, max_dim))
    k = draw(st.integers(0, 5))
    gens = [tuple(draw(small) for _ in range(n)) for _ in range(k)]
    return ConvexPolyCone.from_generators(gens, n)


@settings(max_examples=200, deadline=None)
@given(cones())
def test_polar_involution(C):
    assert eg.cone_equal(eg.polar(eg.polar(C)), C)


@settings(max_examples=100, deadline=None)
@given(cones())
def test_generators_satisfy_inequalities(C):
    for g in C.generators:
        assert satisfies(C.inequalities, g)


@settings(max_examples=60, deadline=None)
@given(cones(n=3), cones(n=3), cones(n=3))
def test_conic_sum_assoc_commutative(A, B, C):
    left = eg.conic_sum([eg.conic_sum([A, B]), C])
    right = eg.conic_sum([A, eg.conic_sum([C, B])])
    assert eg.cone_equal(left, right)


rat = st.fractions(min_value=-3, max_value=3, max_denominator=5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(small, small, st.integers(-2, 2)), min_size=1, max_size=4),
       st.tuples(rat, rat), st.tuples(rat, rat))
def test_project_idempotent_nonexpansive(rows, x, y):
    A = [(a, b) for a, b, _ in rows if (a, b) != (0, 0)]
    b = [c for a, bb, c in rows if (a, bb) != (0, 0)]
    if not A:
        return
    P = Polyhedron.make(A, b, 2)
    if P.is_empty():
        return
    px, py = eg.project(P, x), eg.project(P, y)
    assert P.contains(px)
    assert eg.project(P, px) == px
    assert eg.norm2(eg.sub(px, py)) <= eg.norm2(eg.sub(x, y))
