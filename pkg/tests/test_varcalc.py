import math
from fractions import Fraction as F

import pytest

from conekit import exactgeom as eg
from conekit import setalg as sa
from conekit import varcalc as vc
from conekit.exactgeom import ConvexPolyCone
from conekit.setalg import Atom, Epigraph, LevelSet

O = (0, 0)
UP = LevelSet(Atom.quadratic([[1, 0], [0, 0]], [0, -1]))  # x2 >= x1^2
DOWN = LevelSet(Atom.quadratic([[1, 0], [0, 0]], [0, 1]))  # x2 <= -x1^2
PHI = Atom.piecewise([([[1]], [0], [["i"]], [0], 0), ([[-1]], [0], [[0]], [0], 0)])
AXES = sa.Union((sa.Polyhedral.make([(0, 1), (0, -1)], [0, 0]), sa.Polyhedral.make([(1, 0), (-1, 0)], [0, 0])))

R_RPLUS = ConvexPolyCone.from_generators([(1, 0), (-1, 0), (0, 1)], 2)
R_RMINUS = ConvexPolyCone.from_generators([(1, 0), (-1, 0), (0, -1)], 2)


def single(res):
    return res.single()


def test_tangent_of_parabola_region():
    res = vc.tangent_cone(UP, O)
    assert res.exact and eg.cone_equal(single(res), R_RPLUS)
    assert eg.cone_equal(single(vc.tangent_cone(DOWN, O)), R_RMINUS)


def test_tangent_of_whole_space():
    assert single(vc.tangent_cone(sa.whole(3), (0, 0, 0))).is_whole()


@pytest.mark.parametrize("i", [1, 2, 5, 64])
def test_tangent_of_epigraph_members(i):
    E = Epigraph(sa.at_index(PHI, i))
    assert eg.cone_equal(single(vc.tangent_cone(E, O)), R_RPLUS)


def test_tangent_of_touching_pair_is_origin():
    assert single(vc.tangent_cone(sa.Intersection((UP, DOWN)), O)).is_zero()


def test_frechet_cones():
    H = sa.halfspace((0, -1))
    assert eg.cone_equal(single(vc.frechet_normal_cone(H, O)), ConvexPolyCone.from_generators([(0, -1)], 2))
    assert single(vc.frechet_normal_cone(sa.Intersection((UP, DOWN)), O)).is_whole()
    a = (2, -3)
    assert eg.cone_equal(single(vc.frechet_normal_cone(sa.halfspace(a), O)), ConvexPolyCone.from_generators([a], 2))


def test_limiting_of_convex_parabola():
    N = vc.limiting_normal_cone(UP, O)
    assert N.exact and eg.cone_equal(single(N), ConvexPolyCone.from_generators([(0, -1)], 2))


def test_limiting_of_axes_union():
    N = vc.limiting_normal_cone(AXES, O)
    assert N.exact
    for v in [(1, 0), (-3, 0), (0, 2), (0, -1)]:
        assert N.cone.contains(v)
    assert not N.cone.contains((1, 1))
    # projection-sampling oracle only ever produces axis directions
    sampled = vc.oracle_normal(AXES, O)
    for d in sampled.meta["normals"]:
        assert min(abs(d[0]), abs(d[1])) < 1e-6


def test_inclusion_on_parabola():
    T = single(vc.tangent_cone(UP, O))
    N_T = vc.limiting_normal_of_cone(T)
    N = vc.limiting_normal_cone(UP, O)
    for g in N_T.generators():
        assert N.cone.contains(g)


# ---------------------------------------------------------------- subdifferentials

def test_linear_subdifferentials():
    phi = Atom.affine((0, -1))
    assert vc.subdifferential(phi, O).points == ((0, -1),)
    assert vc.subdifferential(phi, O, "upper").points == ((0, -1),)
    assert vc.subdifferential(phi, O, "singular").points == ((0, 0),)


@pytest.mark.parametrize("i", [1, 3, 10])
def test_piecewise_and_quadratic_gradients(i):
    phi48 = Atom.piecewise([([[1, 0]], [0], [[i, 0], [0, 0]], [0, -1], 0),
                            ([[-1, 0]], [0], [[0, 0], [0, 0]], [0, -1], 0)])
    assert vc.subdifferential(phi48, O).points == ((0, -1),)
    quad = Atom.quadratic([[i, 0], [0, 0]], [0, -1])
    assert vc.subdifferential(quad, O).points == ((0, -1),)


def test_abs_value_subdifferential_is_interval():
    absval = Atom.piecewise([([[-1]], [0], [[0]], [1], 0), ([[1]], [0], [[0]], [-1], 0)])
    sd = vc.subdifferential(absval, (0,))
    assert set(sd.points) == {(-1,), (1,)}
    assert sd.contains((F(1, 3),)) and not sd.contains((2,))
    # the upper subdifferential of a convex kink is empty
    assert vc.subdifferential(absval, (0,), "upper").empty


def test_unknown_flavor():
    with pytest.raises(vc.UnsupportedFlavor):
        vc.subdifferential(Atom.affine((1,)), (0,), "proximal")


# ---------------------------------------------------------------- coderivatives

ABS_GRAPH = sa.Polyhedral.make([(1, -1), (-1, -1)], [0, 0])  # y >= |x|


def test_coderivative_of_abs_graph():
    D = vc.coderivative(ABS_GRAPH, O, (1,), 1)
    for v, inside in [((1,), True), ((-1,), True), ((F(1, 2),), True), ((F(11, 10),), False)]:
        assert D.contains(v) == inside
    assert vc.coderivative(ABS_GRAPH, O, (0,), 1).is_zero_only()


def test_coderivative_of_linear_map():
    # f(x) = M x with M = [[2, 1]]; graph {(x, y) : y = 2 x1 + x2}
    G = sa.Polyhedral.make([(2, 1, -1), (-2, -1, 1)], [0, 0])
    D = vc.coderivative(G, (0, 0, 0), (3,), 2)
    assert D.contains((6, 3)) and not D.contains((6, 2))


# ---------------------------------------------------------------- duality and oracles

@pytest.mark.parametrize("S", [UP, DOWN, sa.halfspace((1, 2)), sa.Intersection((UP, DOWN)),
                               sa.Polyhedral.make([(1, 0), (0, 1)], [0, 0]), AXES])
def test_frechet_is_polar_of_tangent(S):
    T = vc.tangent_cone(S, O)
    Nf = single(vc.frechet_normal_cone(S, O))
    polars = [eg.polar(p) for p in T.pieces]
    assert eg.cone_equal(Nf, eg.intersect(*polars))


@pytest.mark.parametrize("S", [UP, sa.halfspace((1, 2)), sa.Polyhedral.make([(1, 0), (0, 1)], [0, 0])])
def test_convex_limiting_equals_frechet(S):
    assert eg.cone_equal(single(vc.limiting_normal_cone(S, O)), single(vc.frechet_normal_cone(S, O)))


def _boundary_angle(d, C):
    # angle between direction d and the nearest facet hyperplane of C
    best = 180.0
    for a in C.inequalities:
        na = math.sqrt(sum(float(x) ** 2 for x in a))
        s = abs(sum(float(x) * y for x, y in zip(a, d))) / na
        best = min(best, math.degrees(math.asin(min(1.0, s))))
    return best


@pytest.mark.parametrize("S", [UP, DOWN, sa.Intersection((UP, DOWN)), sa.whole(2)])
def test_tangent_oracle_agrees(S):
    exact = single(vc.tangent_cone(S, O))
    sampled = vc.oracle_tangent(S, O)
    accepted = set(sampled.meta["accepted"])
    for d in sampled.meta["all"]:
        inside = exact.contains(vc._rational(d, 10 ** 9))
        if (d in accepted) != inside:
            assert _boundary_angle(d, exact) <= 1.0


def test_whole_space_oracle_accepts_everything():
    sampled = vc.oracle_tangent(sa.whole(2), O)
    assert len(sampled.meta["accepted"]) == len(sampled.meta["all"])


def test_normal_oracle_clusters_at_downward_direction():
    sampled = vc.oracle_normal(UP, O)
    for d in sampled.meta["normals"]:
        assert vc.angle_to_cone(d, ConvexPolyCone.from_generators([(0, -1)], 2)) < 1.0
