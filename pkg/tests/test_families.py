import random
from fractions import Fraction as F

import pytest

from conekit import exactgeom as eg
from conekit import families as fam
from conekit import setalg as sa
from conekit import varcalc as vc
from conekit.exactgeom import ConvexPolyCone
from conekit.setalg import Atom, Epigraph, IndexedFamily, LevelSet, TruncationPolicy

O = (0, 0)
UP = LevelSet(Atom.quadratic([[1, 0], [0, 0]], [0, -1]))
DOWN = LevelSet(Atom.quadratic([[1, 0], [0, 0]], [0, 1]))
PAIR = IndexedFamily.finite([UP, DOWN])
PHI = Atom.piecewise([([[1]], [0], [["i"]], [0], 0), ([[-1]], [0], [[0]], [0], 0)])
EPI = IndexedFamily.from_template(Epigraph(PHI))
LIN = IndexedFamily.from_template(sa.halfspace((1, "i")), start=0)


def canon(v):
    return eg.primitive(eg.vec(v))


def test_chip_fails_for_touching_pair():
    v = fam.chip_check(PAIR, O)
    assert v.holds == "no" and v.exact
    assert canon(v.witness) in {(1, 0), (-1, 0)}
    assert v.left.pieces[0].is_zero()
    assert eg.cone_equal(v.right.pieces[0], ConvexPolyCone.from_generators([(1, 0), (-1, 0)], 2))


def test_chip_fails_for_epigraph_family():
    v = fam.chip_check(EPI, O, 64)
    assert v.holds == "no" and canon(v.witness) == (-1, 0)
    assert eg.cone_equal(v.left.pieces[0], ConvexPolyCone.from_generators([(1, 0), (0, 1)], 2))
    assert eg.cone_equal(v.right.pieces[0], ConvexPolyCone.from_generators([(1, 0), (-1, 0), (0, 1)], 2))


def test_chip_holds_for_linear_family():
    assert fam.chip_check(LIN, O).holds == "yes"


def test_single_member_family_always_chip():
    for S in (UP, DOWN, sa.halfspace((3, -1))):
        assert fam.chip_check(IndexedFamily.finite([S]), O).holds == "yes"


def test_asymptotic_chip_linear_family_closure():
    v = fam.asymptotic_strong_chip_check(LIN, O, 64)
    assert v.holds == "yes"
    quadrant = ConvexPolyCone.from_generators([(1, 0), (0, 1)], 2)
    assert eg.cone_equal(v.left.pieces[0], quadrant)
    assert eg.cone_equal(v.right.pieces[0], quadrant)


def test_asymptotic_chip_single_halfspace():
    a = (2, -1)
    v = fam.asymptotic_strong_chip_check(IndexedFamily.finite([sa.halfspace(a)]), O)
    ray = ConvexPolyCone.from_generators([a], 2)
    assert v.holds == "yes" and eg.cone_equal(v.left.pieces[0], ray) and eg.cone_equal(v.right.pieces[0], ray)


def test_asymptotic_chip_fails_on_epigraph_family():
    assert fam.asymptotic_strong_chip_check(EPI, O, 64).holds == "no"


def test_limit_normal_direction_of_linear_family():
    assert (0, 1) in [canon(d) for d in fam.limit_normal_directions(LIN, O, 16)]


# ---------------------------------------------------------------- regularity, rank, invex

def test_regularity_identical_halfspaces():
    H = sa.halfspace((1, 1))
    est = fam.linear_regularity_estimate(IndexedFamily.finite([H, H]), O)
    assert est.trend == "bounded" and abs(est.C_hat - 1) < 1e-9


def test_regularity_touching_pair_grows():
    assert fam.linear_regularity_estimate(PAIR, O).trend == "growing"


def test_regularity_orthogonal_halfspaces():
    est = fam.linear_regularity_estimate(IndexedFamily.finite([sa.halfspace((1, 0)), sa.halfspace((0, 1))]), O)
    assert est.trend == "bounded" and est.C_hat <= 2 ** 0.5 + 1e-9


def test_equi_dir_diff():
    halfspaces = IndexedFamily.finite([sa.halfspace((1, 0)), sa.halfspace((1, 1))])
    assert fam.equi_dir_diff_check(halfspaces, O)[0]
    assert fam.equi_dir_diff_check(IndexedFamily.finite([UP]), O)[0]
    # quotient along (-1, 0) behaves like i t, so no t works uniformly in i
    t_grid = [F(1, 2 ** k) for k in range(1, 7)]
    ok, rep = fam.equi_dir_diff_check(EPI, O, directions=[(-1, 0)], t_grid=t_grid, K=256)
    assert not ok and rep["worst_deviation"] > 0.5


def test_rank_zero_for_singleton_member():
    point = sa.Polyhedral.make([(1, 0), (-1, 0), (0, 1), (0, -1)], [0, 0, 0, 0])
    r = fam.tangential_rank(IndexedFamily.finite([UP, point]), O)
    assert r.value == 0 and r.exact and r.verdict.holds == "yes"


def test_rank_zero_for_nested_member():
    inner = sa.Polyhedral.make([(1, 0), (0, 1)], [0, 0])
    r = fam.tangential_rank(IndexedFamily.finite([inner, sa.halfspace((1, 0)), sa.halfspace((0, 1))]), O)
    assert r.value == 0 and r.exact


def test_rank_of_touching_pair_is_one():
    r = fam.tangential_rank(PAIR, O)
    assert not r.exact and abs(r.value - 1) < 1e-6


def test_invex_complements_touching_origin():
    boxes = [sa.Complement.make([(-1, 0), (1, 0), (0, 1), (0, -1)], [0, k, k, k]) for k in (1, 2, 3)]
    v = fam.invex_chip_check(IndexedFamily.finite(boxes), O)
    assert v.holds == "yes" and "passed" in v.note


def test_invex_all_interior():
    big = [sa.Polyhedral.make([(1, 0), (-1, 0)], [k, k]) for k in (1, 2)]
    v = fam.invex_chip_check(IndexedFamily.finite(big), O)
    assert v.holds == "yes" and "[]" in v.note


def test_invex_not_applicable_for_parabolas():
    assert fam.invex_chip_check(PAIR, O).holds == "not-applicable"


# ---------------------------------------------------------------- properties

def random_halfspace_family(rng, n):
    k = rng.randint(1, 6)
    rows = []
    while len(rows) < k:
        a = tuple(rng.randint(-3, 3) for _ in range(n))
        if any(a):
            rows.append(a)
    return IndexedFamily.finite([sa.halfspace(a) for a in rows])


def test_chip_equals_asymptotic_chip_on_random_families():
    rng = random.Random(20240)
    for _ in range(100):
        n = rng.randint(1, 3)
        G = random_halfspace_family(rng, n)
        x = (0,) * n
        assert fam.chip_check(G, x).holds == fam.asymptotic_strong_chip_check(G, x).holds


@pytest.mark.parametrize("G, K", [(PAIR, 2), (EPI, 12), (LIN, 12)])
def test_monotonicity_of_truncated_intersections(G, K):
    meet = vc.tangent_cone(sa.Intersection(tuple(G.instantiate(i) for i in G.indices(K))), O).cone
    for j in G.indices(K):
        Tj = vc.tangent_cone(G.instantiate(j), O).cone
        for g in meet.generators():
            assert Tj.contains(g)


def test_rank_zero_never_contradicted():
    point = sa.Polyhedral.make([(1, 0), (-1, 0), (0, 1), (0, -1)], [0, 0, 0, 0])
    G = IndexedFamily.finite([UP, DOWN, point])
    assert fam.tangential_rank(G, O).verdict.holds == "yes"
    assert fam.chip_check(G, O).holds != "no"


def test_policy_respected():
    G = IndexedFamily.from_template(sa.halfspace((1, "i")), start=0, policy=TruncationPolicy(4, 10, 3))
    assert fam.chip_check(G, O).K_used <= 10
