import random
from fractions import Fraction as F

import pytest

from conekit import exactgeom as eg
from conekit import families as fam
from conekit import qualconds as qc
from conekit import setalg as sa
from conekit.exactgeom import ConvexPolyCone
from conekit.setalg import Atom, ConjugateSpec, IndexedFamily, LevelSet

O = (0, 0)
LIN_ATOMS = IndexedFamily.from_template(Atom.affine((1, "i")), start=0)
QUAD_ATOMS = IndexedFamily.from_template(Atom.quadratic([["i", 0], [0, 0]], [0, -1]), start=1)
PHI48 = Atom.piecewise(
    [([[1, 0]], [0], [["i", 0], [0, 0]], [0, -1], 0), ([[-1, 0]], [0], [[0, 0], [0, 0]], [0, -1], 0)],
    conj=ConjugateSpec((0, -1), (-1, 0), sa.coef("1/(4*i)"), 0, 0),
)
ATOMS48 = IndexedFamily.from_template(PHI48, start=1)
OBJ48 = Atom.affine((0, -1))
ANTIPODAL = IndexedFamily.finite([sa.halfspace((1, 0)), sa.halfspace((-1, 0))])


def check_nqc_witness(w):
    # sum mu g = 0, mu >= 0, sum mu = 1, all exact
    total = (F(0),) * len(w["generators"][0][1])
    for mu, (_, g) in zip(w["mu"], w["generators"]):
        assert mu >= 0
        total = eg.add(total, eg.scale(mu, g))
    assert eg.is_zero(total) and sum(w["mu"]) == 1


# ---------------------------------------------------------------- NQC

def test_antipodal_halfspaces_fail_nqc():
    v = qc.nqc_check(ANTIPODAL, O)
    assert v.holds == "no" and v.witness["mu"] == [F(1, 2), F(1, 2)]
    check_nqc_witness(v.witness)


def test_convex_family_with_interior_point_has_nqc():
    G = IndexedFamily.finite([sa.halfspace((1, 0)), sa.halfspace((0, 1)), sa.halfspace((1, 1))])
    assert qc.nqc_check(G, O).holds == "yes"


def test_linear_family_nqc():
    v = qc.nqc_check(LIN_ATOMS.levels(), O)
    assert v.holds == "yes"


def test_interior_point_nqc():
    SW = IndexedFamily.finite([sa.halfspace((1, 0)), sa.halfspace((0, 1))])
    v = qc.interior_point_nqc(SW, O)
    assert v.holds == "yes"
    w, k0 = v.witness, v.data["i0"] - 1
    normals = [(1, 0), (0, 1)]
    # in the chosen member, strictly inside the other
    assert eg.dot(normals[k0], w) <= 0 and eg.dot(normals[1 - k0], w) < 0
    UP = LevelSet(Atom.quadratic([[1, 0], [0, 0]], [0, -1]))
    DOWN = LevelSet(Atom.quadratic([[1, 0], [0, 0]], [0, 1]))
    assert qc.interior_point_nqc(IndexedFamily.finite([UP, DOWN]), O).holds == "inconclusive-at-K"
    lin = qc.interior_point_nqc(LIN_ATOMS.levels(), O)
    assert lin.holds == "yes"
    # strictly inside every other member: <(1, i), w> < 0
    i0 = lin.data["i0"]
    assert eg.dot((1, i0), lin.witness) <= 0
    assert all(eg.dot((1, i), lin.witness) < 0 for i in range(0, 200) if i != i0)


def test_interior_point_consistent_with_nqc_on_random_families():
    rng = random.Random(7)
    for _ in range(40):
        rows = [tuple(rng.randint(-3, 3) for _ in range(2)) for _ in range(rng.randint(1, 5))]
        rows = [r for r in rows if any(r)]
        if not rows:
            continue
        G = IndexedFamily.finite([sa.halfspace(a) for a in rows])
        if qc.interior_point_nqc(G, O).holds == "yes":
            assert qc.nqc_check(G, O).holds != "no"


# ---------------------------------------------------------------- closedness

def test_ncc_fails_for_linear_family():
    v = qc.ncc_check(LIN_ATOMS.levels(), O)
    assert v.holds == "no" and eg.primitive(v.witness) == (0, 1)


def test_ncc_finite_polyhedral_family():
    G = IndexedFamily.finite([sa.halfspace((1, 2)), sa.halfspace((3, -1)), sa.Polyhedral.make([(0, 1), (1, 1)], [0, 0])])
    assert qc.ncc_check(G, O).holds == "yes"


def test_scc_linear_and_quadratic():
    v = qc.scc_check(LIN_ATOMS, O)
    assert v.holds == "no" and eg.primitive(v.witness) == (0, 1)
    assert qc.scc_check(QUAD_ATOMS, O).holds == "yes"


def test_sqc():
    assert qc.sqc_check(ATOMS48, O).holds == "yes"
    opposite = IndexedFamily.finite([Atom.affine((1, 2)), Atom.affine((-1, -2))])
    assert qc.sqc_check(opposite, O).holds == "no"
    inactive = IndexedFamily.from_template(Atom.affine(("1/i", 0), -1), start=1)
    assert qc.sqc_check(inactive, O).holds == "yes"


def test_fmcq_and_cqc_fail_on_piecewise_family():
    f = qc.fmcq_check(ATOMS48)
    c = qc.cqc_check(OBJ48, ATOMS48)
    assert f.holds == "no" and c.holds == "no"
    assert f.exact and c.exact


def test_fmcq_finite_affine_family():
    G = IndexedFamily.finite([Atom.affine((1, 0), -1), Atom.affine((0, 1), -2), Atom.affine((1, 1), -1)])
    v = qc.fmcq_check(G)
    assert v.holds == "yes"
    # and the objective-augmented version follows
    assert qc.cqc_check(Atom.affine((1, -1)), G).holds == "yes"


# ---------------------------------------------------------------- independence table

@pytest.mark.parametrize("atoms, chip, scc", [
    (ATOMS48, "no", "yes"),  # CHIP fails: the level sets meet in the closed positive quadrant
    (LIN_ATOMS, "yes", "no"),
    (QUAD_ATOMS, "no", "yes"),
])
def test_independence_table(atoms, chip, scc):
    assert fam.chip_check(atoms.levels(), O, 32).holds == chip
    assert qc.scc_check(atoms, O).holds == scc


def test_piecewise_family_intersection_is_quadrant():
    lim = sa.FlatSet(sa.limit_set(ATOMS48.levels()))
    assert sa.member(lim, (0, 0)) and sa.member(lim, (1, 1))
    assert not sa.member(lim, (F(-1, 10 ** 6), 1))
    meet = fam._left_side(ATOMS48.levels(), O, 8)[0]
    assert eg.cone_equal(meet.pieces[0], ConvexPolyCone.from_generators([(1, 0), (0, 1)], 2))
