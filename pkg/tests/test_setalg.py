from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from conekit import exactgeom as eg
from conekit import setalg as sa
from conekit.setalg import Atom, Epigraph, IndexedFamily, LevelSet, TruncationPolicy

PARABOLA = LevelSet(Atom.quadratic([[1, 0], [0, 0]], [0, -1]))  # x2 >= x1^2
UPPER = sa.halfspace((0, -1))  # x2 >= 0
SW = sa.Polyhedral.make([(1, 0), (0, 1)], [0, 0])  # x1 <= 0, x2 <= 0
PHI = Atom.piecewise([([[1]], [0], [["i"]], [0], 0), ([[-1]], [0], [[0]], [0], 0)])


def test_member_boundary_point():
    assert sa.member(PARABOLA, (1, 1))
    assert not sa.member(PARABOLA, (1, F(99, 100)))


def test_distance_to_halfplane():
    d = sa.distance(UPPER, (0, -3))
    assert d.exact and d.sq == 9


def test_distance_to_quadrant_is_squared_exact():
    d = sa.distance(SW, (1, 1))
    assert d.exact and d.sq == 2
    # projection oracle: the nearest point is the corner
    assert eg.project(sa.Polyhedral.make([(1, 0), (0, 1)], [0, 0]).polyhedron(), (1, 1)) == (0, 0)


def test_instantiate_linear_family():
    fam = IndexedFamily.from_template(sa.halfspace((1, "i")), start=0)
    H3 = fam.instantiate(3)
    assert sa.member(H3, (-3, 1)) and not sa.member(H3, (-2, 1))


def test_instantiate_epigraph_family():
    fam = IndexedFamily.from_template(Epigraph(PHI))
    E2 = fam.instantiate(2)
    # phi_2(x) = 2 x^2 on x < 0 and 0 on x >= 0
    assert sa.member(E2, (-1, 2)) and not sa.member(E2, (-1, F(19, 10)))
    assert sa.member(E2, (5, 0)) and not sa.member(E2, (5, F(-1, 10)))


def test_constant_family_instantiates_same_expression():
    fam = IndexedFamily.from_template(UPPER)
    assert fam.instantiate(1) == fam.instantiate(7)
    assert fam.is_constant()


def test_stagnation_constant_family():
    fam = IndexedFamily.from_template(UPPER, policy=TruncationPolicy(8, 64, 5))
    res = sa.stagnation_scan(fam, lambda K: K // 100)
    assert res.stagnated and res.K_star == 8


def test_stagnation_never_for_new_rays():
    fam = IndexedFamily.from_template(sa.halfspace((1, "i")), start=0, policy=TruncationPolicy(8, 40, 5))

    def hull(K):
        return eg.ConvexPolyCone.from_generators([(1, i) for i in range(K + 1)], 2)

    res = sa.stagnation_scan(fam, hull, eg.cone_equal)
    assert not res.stagnated and res.K_used == 40


def test_limit_set_of_epigraph_family():
    fam = IndexedFamily.from_template(Epigraph(PHI))
    lim = sa.FlatSet(sa.limit_set(fam))
    # the full intersection is the closed positive quadrant
    for p, inside in [((0, 0), True), ((1, 2), True), ((F(-1, 1000), 5), False), ((1, F(-1, 10)), False)]:
        assert sa.member(lim, p) == inside


def test_atom_values():
    assert sa.at_index(PHI, 3).value((-2,)) == 12 and sa.at_index(PHI, 3).value((2,)) == 0
    assert Atom.affine((1, 2), -1).value((1, 1)) == 2


@settings(max_examples=200, deadline=None)
@given(st.fractions(-3, 3, max_denominator=8), st.fractions(-3, 3, max_denominator=8))
def test_member_agrees_with_zero_distance(a, b):
    for S in (UPPER, SW, sa.Union((UPPER, SW))):
        assert sa.member(S, (a, b)) == (sa.distance(S, (a, b)).sq == 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.fractions(-2, 2, max_denominator=16))
def test_piecewise_atom_matches_closed_form(i, x):
    assert sa.at_index(PHI, i).value((x,)) == (i * x * x if x < 0 else 0)


def test_atom_continuity_on_piece_boundaries():
    for i in (1, 2, 7, 64):
        assert sa.at_index(PHI, i).validate(seed=i, samples=100) == []
    broken = Atom.piecewise([([[1]], [0], [[0]], [1], 0), ([[-1]], [0], [[0]], [0], 1)])
    assert broken.validate()[0][0] == "discontinuous"
