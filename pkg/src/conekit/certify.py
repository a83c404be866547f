"""Certificates for extremal principles, normal representations and optimality conditions.

Every certificate carries the data it was built from and a ``verify`` method
that re-checks its identities with :mod:`conekit.exactgeom` alone.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import exactgeom as eg
from . import families as fam
from . import qualconds as qc
from . import setalg as sa
from . import varcalc as vc
from .exactgeom import ConeRep, ConvexPolyCone, dot, vec
from .lp import linprog
from .templates import limit_direction

ZERO = Fraction(0)
ONE = Fraction(1)
PIECE_CHOICE_CAP = 256


class HypothesisViolation(Exception):
    """A hypothesis of the underlying theorem is not verified."""

    def __init__(self, failed, message=""):
        self.failed = tuple(failed)
        super().__init__(message or "hypothesis not verified: " + ", ".join(self.failed))


class NotFound(Exception):
    """No certificate exists at the current truncation or search budget."""


def _convex_pieces(c):
    rep = eg.as_rep(c)
    if len(rep.pieces) != 1:
        raise sa.Unsupported("a convex cone is required here")
    return rep.pieces[0]


def _lp_combination(target, gens, n):
    """Nonnegative ``mu`` with ``sum mu_k gens[k] = target``, or ``None``."""
    if not gens:
        return () if eg.is_zero(target) else None
    m = len(gens)
    A_eq = [tuple(g[r] for g in gens) for r in range(n)]
    res = linprog([ZERO] * m, (), (), A_eq, list(target), nonneg=range(m))
    return res.x if res.status == "optimal" else None


def _cone_dist2(target, cones, n):
    """Exact squared distance from ``target`` to the sum of convex cones."""
    S = eg.conic_sum(cones, n) if cones else ConvexPolyCone.zero(n)
    A = list(S.facets)
    for e in S.eqs:
        A.append(e)
        A.append(eg.scale(-1, e))
    P = eg.Polyhedron(tuple(A), (ZERO,) * len(A), n)
    return eg.dist2(P.irredundant() if len(A) > eg.PROJECTION_CAP else P, target)


# ---------------------------------------------------------------- extremal principle

@dataclass(frozen=True)
class ShiftWitness:
    found: bool
    shifts: tuple | None
    bound: Fraction
    note: str = ""


@dataclass(frozen=True)
class ExtremalCertificate:
    normals: tuple  # unscaled x*_i, i = 1..K
    homes: tuple  # N(0; Lambda_i) for each i
    scale_sq: Fraction
    K_used: int
    shifts: tuple | None = None
    shift_bound: Fraction | None = None
    note: str = ""

    def weighted_sum(self):
        n = self.homes[0].dim
        total = (ZERO,) * n
        for i, x in enumerate(self.normals, start=1):
            total = eg.add(total, eg.scale(Fraction(1, 2 ** i), x))
        return total

    def normalization(self):
        """``t^2 * sum 2^-i |x*_i|^2``; equals 1 for a valid certificate."""
        s = sum((Fraction(1, 2 ** i) * eg.norm2(x) for i, x in enumerate(self.normals, start=1)), ZERO)
        return self.scale_sq * s

    def verify(self):
        if not all(h.contains(x) for h, x in zip(self.homes, self.normals)):
            return False
        if all(eg.is_zero(x) for x in self.normals):
            return False
        if not eg.is_zero(self.weighted_sum()) or self.normalization() != 1:
            return False
        if self.shifts is not None and self.shift_bound is not None:
            if any(eg.norm2(a) > self.shift_bound ** 2 for a in self.shifts):
                return False
        return True


def _as_cones(cones):
    return [_convex_pieces(c) for c in cones]


def _shifted_empty(cones, shifts):
    """Exact emptiness of ``cap (Lambda_i - a_i)``."""
    n = cones[0].dim
    A, b = [], []
    for C, a in zip(cones, shifts):
        for f in C.inequalities:
            # f.(y + a) <= 0
            A.append(f)
            b.append(-dot(f, a))
    if not A:
        return False
    return eg.Polyhedron(tuple(A), tuple(b), n).is_empty()


def _sqrt_ceil(r):
    """Smallest integer ``k`` with ``k^2 >= r`` for a rational ``r >= 0``."""
    k = math.isqrt(math.ceil(r))
    while k * k < r:
        k += 1
    return max(k, 1)


def tangential_extremality_witness(cones, bound=2):
    """Shifts ``a_i`` with ``|a_i| <= bound`` and ``cap (Lambda_i - a_i)`` empty.

    Tries opposite shifts of a pair of cones along facet normals and
    coordinate axes; ``found=False`` after the budget is a legal outcome.
    """
    cones = _as_cones(cones)
    n = cones[0].dim
    R = Fraction(bound)
    dirs = []
    for C in cones:
        for f in C.inequalities:
            d = eg.primitive(f)
            if d not in dirs:
                dirs.append(d)
    for k in range(n):
        d = tuple(ONE if j == k else ZERO for j in range(n))
        if d not in dirs:
            dirs.append(d)
    K = len(cones)
    for j, k in itertools.combinations(range(K), 2):
        for d in dirs:
            s = R / _sqrt_ceil(eg.norm2(d))
            for sign in (1, -1):
                shifts = [(ZERO,) * n] * K
                shifts[j] = eg.scale(sign * s, d)
                shifts[k] = eg.scale(-sign * s, d)
                if _shifted_empty(cones, shifts):
                    return ShiftWitness(True, tuple(shifts), R)
    meet = eg.intersect(*cones)
    note = "no separating shifts within the bound"
    if meet.cone_dim == n:
        note = "intersection has nonempty interior; bounded shifts cannot separate"
    return ShiftWitness(False, None, R, note)


def _spread_vanishing_sum(normals, n):
    """Elements ``y_i`` of every cone, each built with total weight 1, summing to zero."""
    gens, owner = [], []
    for k, N in enumerate(normals):
        for g in N.generators:
            gens.append(g)
            owner.append(k)
    if not gens:
        return None
    m = len(gens)
    A_eq = [tuple(g[r] for g in gens) for r in range(n)]
    A_ub = [tuple(-ONE if owner[j] == k else ZERO for j in range(m)) for k in range(len(normals))]
    res = linprog([ZERO] * m, A_ub, [-ONE] * len(normals), A_eq, [ZERO] * n, nonneg=range(m))
    if res.status != "optimal":
        return None
    parts = {}
    for mu, g, k in zip(res.x, gens, owner):
        if mu:
            parts[k] = eg.add(parts.get(k, (ZERO,) * n), eg.scale(mu, g))
    parts = {k: v for k, v in parts.items() if not eg.is_zero(v)}
    return parts or None


def extremal_certificate(cones, bound=2, require_nonoverlap=True):
    """Normals ``x*_i in N(0; Lambda_i)`` with ``sum 2^-i x*_i = 0``.

    With ``require_nonoverlap=False`` an overlapping system is accepted when
    a shift witness establishes extremality directly.
    """
    cones = _as_cones(cones)
    n = cones[0].dim
    wit = tangential_extremality_witness(cones, bound)
    if not eg.intersect(*cones).is_zero():
        if require_nonoverlap or not wit.found:
            raise HypothesisViolation(["nonoverlap"], "the cones meet outside the origin")
    normals = [eg.polar(C) for C in cones]
    parts = _spread_vanishing_sum(normals, n) or qc._vanishing_sum(normals)
    if parts is None:
        raise NotFound("no nontrivial combination of normals vanishes at this truncation")
    xs = []
    for i in range(1, len(cones) + 1):
        y = parts.get(i - 1, (ZERO,) * n)
        xs.append(eg.scale(2 ** i, y))
    s = sum((Fraction(1, 2 ** i) * eg.norm2(x) for i, x in enumerate(xs, start=1)), ZERO)
    cert = ExtremalCertificate(tuple(xs), tuple(normals), 1 / s, len(cones),
                               wit.shifts, wit.bound if wit.found else None,
                               "" if wit.found else wit.note)
    assert cert.verify()
    return cert


# ---------------------------------------------------------------- Frechet normals to intersections

@dataclass(frozen=True)
class FrechetRep:
    target: tuple
    index_set: tuple
    parts: dict
    homes: dict = field(compare=False)
    gap: Fraction = ZERO
    K_used: int = 0
    exact: bool = True

    @property
    def represented(self):
        return self.gap == 0

    def verify(self):
        n = len(self.target)
        total = (ZERO,) * n
        for i in self.index_set:
            if not self.homes[i].contains(self.parts[i]):
                return False
            total = eg.add(total, self.parts[i])
        return total == self.target if self.represented else self.gap > 0


def frechet_rep_check(cones, xstar, meet=None):
    """Write ``x*`` as a finite sum of normals to the cones, or report the exact gap.

    ``meet`` is the intersection of the whole (possibly infinite) system; by
    default the intersection of the listed cones.
    """
    xstar = vec(xstar)
    reps = [eg.as_rep(c) for c in cones]
    n = reps[0].dim
    normals = [vc.limiting_normal_of_cone(r) for r in reps]
    v = qc.conic_qc_check(normals, "conicQC")
    if v.holds != "yes":
        raise HypothesisViolation(["conicQC"], "conic qualification condition fails")
    if meet is None:
        meet = reps[0]
        for r in reps[1:]:
            meet = eg.intersect_reps(meet, r)
    meet = eg.as_rep(meet)
    # Frechet normals to a union of cones: the intersection of the polars
    if not all(C.polar().contains(xstar) for C in meet.pieces):
        raise vc.DomainError("target is not a Frechet normal to the intersection")
    if eg.is_zero(xstar):
        return FrechetRep(xstar, (), {}, {}, ZERO, len(reps))
    best = None
    choices = list(itertools.product(*[N.pieces for N in normals]))
    for pick in choices[:PIECE_CHOICE_CAP]:
        gens, owner = [], []
        for k, C in enumerate(pick):
            for g in C.generators:
                gens.append(g)
                owner.append(k)
        mu = _lp_combination(xstar, gens, n)
        if mu is not None:
            parts = {}
            for m_, g, k in zip(mu, gens, owner):
                if m_:
                    parts[k] = eg.add(parts.get(k, (ZERO,) * n), eg.scale(m_, g))
            idx = tuple(sorted(parts))
            return FrechetRep(xstar, idx, parts, {k: pick[k] for k in idx}, ZERO, len(reps))
        gap = _cone_dist2(xstar, list(pick), n)
        if best is None or gap < best:
            best = gap
    return FrechetRep(xstar, (), {}, {}, best, len(reps), len(choices) <= PIECE_CHOICE_CAP)


def family_tangent_cones(F, x, K):
    """Tangent cones ``T(x; Omega_i)`` for the first ``K`` members."""
    return [vc.tangent_cone(F.instantiate(i), vec(x)).cone for i in F.indices(K)]


def frechet_rep_family(F, x, xstar, K=None):
    """:func:`frechet_rep_check` for the tangent cones of a family at ``x``."""
    K = fam._default_K(F, K)
    left, how = fam._left_side(F, vec(x), K)
    if left is None:
        raise sa.Unsupported("no exact intersection: " + how)
    return frechet_rep_check(family_tangent_cones(F, x, K), xstar, meet=left)


# ---------------------------------------------------------------- SIP optimality conditions

@dataclass(frozen=True)
class SIPProblem:
    """Minimise ``objective`` subject to countable constraints.

    ``kind`` is ``geometric`` (members are sets), ``inequality`` or
    ``linear`` (members are atoms, constraint ``phi_i <= 0``) or ``operator``
    (constraint ``M x + m in Theta_i`` with members ``Theta_i``).
    """

    objective: sa.Atom
    kind: str
    family: sa.IndexedFamily
    M: tuple | None = None
    m: tuple | None = None
    normally_regular: bool | None = None


@dataclass(frozen=True)
class KKTCertificate:
    status: str  # "certified" | "condition-violated"
    mode: str
    kind: str
    targets: tuple  # the (sub)gradients whose negation is represented
    index_set: tuple
    multipliers: dict
    normals: dict
    homes: dict = field(compare=False)
    limits: tuple = ()  # closure directions used, with coefficients
    residual: Fraction = ZERO
    closure_used: bool = False
    qualifications: tuple = ()
    K_used: int = 0
    exact: bool = True
    note: str = ""

    def verify(self):
        """Re-check memberships and the sum identity for every target."""
        if self.status != "certified":
            return self.residual > 0
        for k, v in enumerate(self.targets):
            n = len(v)
            total = (ZERO,) * n
            for i in self.index_set:
                x = self.normals[(k, i)] if (k, i) in self.normals else None
                if x is None:
                    continue
                if not self.homes[i].contains(x):
                    return False
                total = eg.add(total, x)
            for kk, c, d in self.limits:
                if kk == k:
                    total = eg.add(total, eg.scale(c, d))
            if total != eg.scale(-1, v):
                return False
        return True


def _normals_geometric(F, x, K):
    out = {}
    for i in F.indices(K):
        N = vc.limiting_normal_cone(F.instantiate(i), x)
        out[i] = N.cone
    return out


def _normals_inequality(F, x, K):
    out = {}
    for i in F.indices(K):
        at = F.instantiate(i)
        if at.value(x) != 0:
            continue
        sd = vc.subdifferential(at, x, "basic")
        C = ConvexPolyCone.from_generators(list(sd.points), at.dim)
        if not C.is_zero():
            out[i] = ConeRep((C,))
    return out


def _represent(target, normals, n, limits=()):
    """``-target`` as a sum of one element per normal cone plus limit directions.

    Returns ``(parts, limit_coeffs)`` or ``None``.
    """
    goal = eg.scale(-1, target)
    idx = sorted(normals)
    choices = itertools.product(*[normals[i].pieces for i in idx])
    for count, pick in enumerate(choices):
        if count >= PIECE_CHOICE_CAP:
            break
        gens, owner = [], []
        for i, C in zip(idx, pick):
            for g in C.generators:
                gens.append(g)
                owner.append(i)
        for d in limits:
            gens.append(d)
            owner.append(None)
        mu = _lp_combination(goal, gens, n)
        if mu is None:
            continue
        parts, lim = {}, []
        for m_, g, i in zip(mu, gens, owner):
            if not m_:
                continue
            if i is None:
                lim.append((m_, g))
            else:
                parts[i] = eg.add(parts.get(i, (ZERO,) * n), eg.scale(m_, g))
        homes = {i: C for i, C in zip(idx, pick)}
        return parts, lim, homes
    return None


def _gap(target, normals, n):
    goal = eg.scale(-1, target)
    cones = [N.pieces[0] for N in normals.values() if len(N.pieces) == 1]
    return _cone_dist2(goal, cones, n)


def _require(verdicts, assume):
    failed = [v.prop if hasattr(v, "prop") else v.condition for v in verdicts if v.holds != "yes"]
    failed = [f for f in failed if f not in assume]
    if failed:
        raise HypothesisViolation(failed)


def _as_geometric(problem):
    F = problem.family
    if problem.kind == "operator":
        probe = F.instantiate(F.start)
        S = sa.Preimage.make(problem.M, problem.m, probe)
        if not S.surjective:
            raise HypothesisViolation(["surjective"], "the constraint map is not surjective")
        M, m = problem.M, problem.m
        return F.map(lambda T: sa.Preimage.make(M, m, T))
    return F


def sip_certify(problem, x, mode="lower", K=None, assume=()):
    """Necessary optimality conditions for a semi-infinite program at ``x``.

    Qualification verdicts are computed first; any that is not ``yes`` and
    not listed in ``assume`` raises :class:`HypothesisViolation`. Returns a
    certified multiplier representation or ``condition-violated``.
    """
    if mode not in ("upper", "lower"):
        raise ValueError("mode must be 'upper' or 'lower'")
    x = vec(x)
    assume = set(assume)
    n = problem.objective.dim
    kind = problem.kind
    if kind == "linear":
        for i in problem.family.indices(fam._default_K(problem.family, K)):
            if not problem.family.instantiate(i).is_affine:
                raise sa.Unsupported("linear kind needs affine constraints")
    verdicts = []
    if kind in ("geometric", "operator"):
        F = _as_geometric(problem)
        K = fam._default_K(F, K)
        verdicts.append(fam.chip_check(F, x, K))
        verdicts.append(qc.nqc_check(F, x, K))
        if mode == "lower":
            regular = problem.normally_regular
            if regular is None:
                regular = all(vc.is_convex(F.instantiate(i)) for i in F.indices(K))
            if not regular and "normal-regularity" not in assume:
                raise HypothesisViolation(["normal-regularity"])
        _require(verdicts, assume)
        closed = qc.ncc_check(F, x, K)
        normals = _normals_geometric(F, x, K)
        limits = fam.limit_normal_directions(F, x, K) if closed.holds != "yes" else []
    elif kind in ("inequality", "linear"):
        F = problem.family
        K = fam._default_K(F, K)
        verdicts.append(fam.chip_check(F.levels(), x, K))
        verdicts.append(qc.sqc_check(F, x, K))
        _require(verdicts, assume)
        closed = qc.scc_check(F, x, K)
        if closed.holds != "yes" and all(F.instantiate(i).conj is not None for i in F.indices(K)):
            fm = qc.fmcq_check(F, K)
            if fm.holds == "yes":
                closed = fm
        normals = _normals_inequality(F, x, K)
        limits = _ineq_limits(F, x) if closed.holds != "yes" else []
    else:
        raise ValueError(f"unknown constraint kind {kind!r}")
    verdicts.append(closed)
    closure_used = closed.holds != "yes"
    flavor = "upper" if mode == "upper" else "basic"
    sd = vc.subdifferential(problem.objective, x, flavor)
    if mode == "upper":
        targets = sd.points  # vertices suffice for a convex hull target
        if not targets:
            return KKTCertificate("certified", mode, kind, (), (), {}, {}, {}, (), ZERO, False,
                                  tuple(verdicts), K, True, "upper subdifferential is empty; vacuous")
    else:
        targets = sd.points
    found = []
    for v in targets:
        rep = _represent(v, normals, n)
        via_limit = False
        if rep is None and limits:
            rep = _represent(v, normals, n, limits)
            via_limit = rep is not None
        found.append((v, rep, via_limit))
        if mode == "lower" and rep is not None:
            found = [(v, rep, via_limit)]
            break
    ok = [f for f in found if f[1] is not None]
    if (mode == "upper" and len(ok) == len(targets)) or (mode == "lower" and ok):
        multipliers, parts, homes, lims, index = {}, {}, {}, [], set()
        for k, (v, (p, lim, h), _) in enumerate(ok):
            for i, xi in p.items():
                parts[(k, i)] = xi
                homes[i] = h[i]
                index.add(i)
                if kind in ("inequality", "linear"):
                    multipliers[(k, i)] = _multiplier(F.instantiate(i), x, xi)
            for c, d in lim:
                lims.append((k, c, d))
        tv = tuple(v for v, _, _ in ok)
        cert = KKTCertificate("certified", mode, kind, tv, tuple(sorted(index)), multipliers, parts, homes,
                              tuple(lims), ZERO, closure_used or bool(lims), tuple(verdicts), K, True,
                              "closure reached through exact limit directions" if lims else "")
        assert cert.verify()
        return cert
    bad = [v for v, rep, _ in found if rep is None]
    gap = min(_gap(v, normals, n) for v in bad)
    return KKTCertificate("condition-violated", mode, kind, tuple(bad), (), {}, {}, {}, (), gap, closure_used,
                          tuple(verdicts), K, True,
                          "negated (sub)gradient outside the hull of constraint normals")


def _multiplier(atom, x, xi):
    """``lambda`` with ``xi = lambda * g`` when the atom is smooth at ``x``."""
    sd = vc.subdifferential(atom, x, "basic")
    if not sd.singleton:
        return None
    g = sd.points[0]
    for a, b in zip(xi, g):
        if b != 0:
            return a / b
    return ZERO


def _ineq_limits(F, x):
    if F.is_finite or not sa.is_templated(F.template):
        return []
    if not qc._template_always_active(F, x):
        return []
    out = []
    for g in qc._template_gradients(F, x):
        d = limit_direction(g)
        if d is not None:
            d = eg.primitive(d)
            if d not in out:
                out.append(d)
    return out


# ---------------------------------------------------------------- multiobjective problems

MINIMIZER_NOTIONS = ("fully-localized", "graphical", "tangential-graphical")


@dataclass(frozen=True)
class ParetoProblem:
    """Minimise the set-valued map with graph ``graph`` (in R^n x R^m) over ``Omega``
    with respect to the ordering cone ``theta``."""

    graph: sa.SetExpr
    n: int
    theta: ConvexPolyCone
    constraints: sa.IndexedFamily | None = None
    normally_regular: bool | None = None

    @property
    def m(self):
        return self.graph.dim - self.n

    def omega(self):
        F = self.constraints
        if F is None:
            return sa.whole(self.n)
        if F.is_finite:
            return sa.Intersection(F.members) if len(F.members) > 1 else F.members[0]
        if F.is_constant():
            return F.template
        return sa.limit_expr(F)


@dataclass(frozen=True)
class ParetoVerdict:
    notion: str
    holds: bool
    exact: bool
    witness: tuple | None = None
    radius: Fraction | None = None
    note: str = ""


def _check_theta(theta):
    if theta.is_zero() or not eg.is_pointed(theta):
        raise HypothesisViolation(["ordering-cone"], "the ordering cone must be pointed and nonzero")


def _norm1(a):
    return sum((abs(c) for c in a), ZERO)


def _local_radius(row_sets, z):
    """Box radius inside which every polyhedral piece agrees with its tangent cone at ``z``."""
    r = ONE
    for A, b in row_sets:
        for a, bi in zip(A, b):
            s = bi - dot(a, z)
            if s != 0 and _norm1(a):
                r = min(r, abs(s) / _norm1(a))
    return r / 2


def _product_pieces(problem, point):
    """Polyhedral pieces of ``gph F cap [Omega x (ybar - Theta)]`` as row systems."""
    n, m = problem.n, problem.m
    ybar = point[n:]
    gflat = sa.flatten(problem.graph)
    oflat = sa.flatten(problem.omega())
    if not all(p.polyhedral for p in gflat.pieces + oflat.pieces):
        raise sa.Unsupported("exact minimality checks need polyhedral data")
    theta_rows, theta_b = [], []
    for f in problem.theta.facets:
        theta_rows.append((ZERO,) * n + eg.scale(-1, f))
        theta_b.append(-dot(f, ybar))
    for e in problem.theta.eqs:
        for s in (1, -1):
            theta_rows.append((ZERO,) * n + eg.scale(-s, e))
            theta_b.append(-s * dot(e, ybar))
    out = []
    for g in gflat.pieces:
        for w in oflat.pieces:
            A, b = g.rows()
            WA, Wb = w.rows()
            rows = list(A) + [tuple(a) + (ZERO,) * m for a in WA] + theta_rows
            rhs = list(b) + list(Wb) + theta_b
            out.append((tuple(rows), tuple(rhs)))
    return out


def _box_point(rows, rhs, z, r, coords):
    """A point of the system within the box of radius ``r`` that moves some ``coords``."""
    N = len(z)
    A, b = list(rows), list(rhs)
    for k in range(N):
        e = tuple(ONE if j == k else ZERO for j in range(N))
        A.append(e)
        b.append(z[k] + r)
        A.append(eg.scale(-1, e))
        b.append(-z[k] + r)
    for k in coords:
        for s in (1, -1):
            c = [ZERO] * N
            c[k] = Fraction(-s)
            res = linprog(c, A, b)
            if res.status == "optimal" and s * (res.x[k] - z[k]) > 0:
                return res.x
    return None


def pareto_check(problem, point, notion="fully-localized"):
    """Decide a local minimality notion at ``point = (xbar, ybar)``."""
    if notion not in MINIMIZER_NOTIONS:
        raise ValueError(f"unknown notion {notion!r}")
    _check_theta(problem.theta)
    z = vec(point)
    n, m = problem.n, problem.m
    if not sa.member(problem.graph, z) or not sa.member(problem.omega(), z[:n]):
        raise vc.DomainError("point is not feasible")
    if notion == "tangential-graphical":
        TG = vc.tangent_cone(problem.graph, z).cone
        TO = vc.tangent_cone(problem.omega(), z[:n]).cone
        negtheta = [eg.scale(-1, g) for g in problem.theta.generators]
        prods = []
        for P in TO.pieces:
            gens = [tuple(g) + (ZERO,) * m for g in P.generators]
            gens += [(ZERO,) * n + tuple(g) for g in negtheta]
            prods.append(ConvexPolyCone.from_generators(gens, n + m))
        meet = eg.intersect_reps(TG, ConeRep(tuple(prods)))
        for piece in meet.pieces:
            if not piece.is_zero():
                return ParetoVerdict(notion, False, TG.exact and TO.exact, piece.generators[0])
        return ParetoVerdict(notion, True, TG.exact and TO.exact)
    try:
        systems = _product_pieces(problem, z)
    except sa.Unsupported:
        return _pareto_sampled(problem, z, notion)
    r = _local_radius(systems, z)
    coords = range(n, n + m) if notion == "fully-localized" else range(n + m)
    for rows, rhs in systems:
        w = _box_point(rows, rhs, z, r, coords)
        if w is not None:
            return ParetoVerdict(notion, False, True, w, r, "violating point inside every neighborhood (conic scaling)")
    return ParetoVerdict(notion, True, True, None, r, "no competing point in the box of this radius")


def _pareto_sampled(problem, z, notion, samples=2000, seed=0):
    rng = random.Random(seed)
    n = problem.n
    ybar = z[n:]
    witness = None
    for k in range(2, 8):
        r = Fraction(1, 2 ** k)
        hit = None
        for _ in range(samples):
            w = tuple(c + r * Fraction(rng.randint(-64, 64), 64) for c in z)
            moved = w[n:] != ybar if notion == "fully-localized" else w != z
            if not moved:
                continue
            if not problem.theta.contains(eg.sub(ybar, w[n:])):
                continue
            if sa.member(problem.graph, w) and sa.member(problem.omega(), w[:n]):
                hit = w
                break
        if hit is None:
            return ParetoVerdict(notion, True, False, None, r, "sampled: no competing point found")
        witness = hit
    return ParetoVerdict(notion, False, False, witness, Fraction(1, 2 ** 7), "sampled: competing points at every radius")


@dataclass(frozen=True)
class ParetoCertificate:
    ystar: tuple
    x0: tuple
    parts: dict
    homes: dict = field(compare=False)
    graph_home: ConvexPolyCone | None = field(default=None, compare=False)
    theta_dual: ConvexPolyCone | None = field(default=None, compare=False)
    limits: tuple = ()
    residual: Fraction = ZERO
    path: str = ""
    qualifications: tuple = ()
    exact: bool = True
    note: str = ""

    def verify(self):
        if eg.is_zero(self.ystar) or not self.theta_dual.contains(self.ystar):
            return False
        if not self.graph_home.contains(tuple(self.x0) + eg.scale(-1, self.ystar)):
            return False
        total = tuple(self.x0)
        for i, v in self.parts.items():
            if not self.homes[i].contains(v):
                return False
            total = eg.add(total, v)
        for c, d in self.limits:
            total = eg.add(total, eg.scale(c, d))
        return eg.is_zero(total) and self.residual == 0


def _coderiv_zero_meets(problem, z, S):
    """``D*F(z)(0) cap (-S) = {0}`` for a convex cone ``S``; exact."""
    n = problem.n
    D0 = vc.coderivative(problem.graph, z, (ZERO,) * problem.m, n)
    if D0.is_zero_only():
        return True, "coderivative at zero is trivial (Lipschitz-like)"
    negS = ConvexPolyCone.from_generators([eg.scale(-1, g) for g in S.generators], n)
    for P in D0.pieces:
        C = ConvexPolyCone.from_inequalities(list(P.A), n)
        if not eg.intersect(C, negS).is_zero():
            return False, "coderivative at zero meets the negated normal hull"
    return True, "exact cone intersection"


def pareto_necessary_cond(problem, point, K=None, assume=()):
    """Coderivative necessary condition with a nonzero ``y*`` in the dual of the ordering cone."""
    _check_theta(problem.theta)
    z = vec(point)
    n, m = problem.n, problem.m
    assume = set(assume)
    x = z[:n]
    F = problem.constraints
    verdicts, failed = [], []
    normals, limits = {}, []
    if F is not None:
        K = fam._default_K(F, K)
        ch = fam.chip_check(F, x, K)
        nq = qc.nqc_check(F, x, K)
        verdicts += [ch, nq]
        failed += [v.prop if hasattr(v, "prop") else v.condition for v in (ch, nq) if v.holds != "yes"]
        normals = _normals_geometric(F, x, K)
        if qc.ncc_check(F, x, K).holds != "yes":
            limits = fam.limit_normal_directions(F, x, K)
    gens = [g for N in normals.values() for P in N.pieces for g in P.generators] + list(limits)
    S = ConvexPolyCone.from_generators(gens, n) if gens else ConvexPolyCone.zero(n)
    ok, how = _coderiv_zero_meets(problem, z, S)
    if not ok:
        failed.append("coderivative-QC")
    # which theorem applies
    regular = problem.normally_regular
    if regular is None:
        regular = vc.is_convex(problem.omega())
    paths = []
    if regular or "normal-regularity" in assume:
        fl = pareto_check(problem, z, "fully-localized")
        if fl.holds or "fully-localized" in assume:
            paths.append("fully-localized")
    if problem.theta.cone_dim == m:
        tg = pareto_check(problem, z, "tangential-graphical")
        if tg.holds or "tangential-graphical" in assume:
            paths.append("tangential-graphical")
    if not paths:
        failed.append("minimizer-notion")
    failed = [f for f in failed if f not in assume]
    if failed:
        raise HypothesisViolation(failed)
    dual = eg.polar(problem.theta)
    dual = ConvexPolyCone.from_generators([eg.scale(-1, g) for g in dual.generators], m)
    NG = vc.limiting_normal_cone(problem.graph, z).cone
    cands = [eg.primitive(g) for g in dual.rays]
    for ystar in cands:
        for C in NG.pieces:
            sol = _pareto_lp(C, ystar, normals, limits, n)
            if sol is not None:
                x0, parts, homes, lims = sol
                cert = ParetoCertificate(ystar, x0, parts, homes, C, dual, lims, ZERO, paths[0],
                                         tuple(verdicts), NG.exact, "coderivative qualification: " + how)
                assert cert.verify()
                return cert
    raise NotFound("no y* in the dual of the ordering cone satisfies the condition")


def _pareto_lp(C, ystar, normals, limits, n):
    """``x0`` with ``(x0, -y*) in C`` and ``x0 + sum x_i + sum c d = 0``."""
    gens, owner = [], []
    for i in sorted(normals):
        N = normals[i]
        if len(N.pieces) != 1:
            raise sa.Unsupported("nonconvex constraint normal cones")
        for g in N.pieces[0].generators:
            gens.append(g)
            owner.append(i)
    for d in limits:
        gens.append(d)
        owner.append(None)
    k = len(gens)
    # variables: x0 (n, free), mu (k, >= 0)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for a in C.facets:
        A_ub.append(tuple(a[:n]) + (ZERO,) * k)
        b_ub.append(dot(a[n:], ystar))
    for e in C.eqs:
        A_eq.append(tuple(e[:n]) + (ZERO,) * k)
        b_eq.append(dot(e[n:], ystar))
    for r in range(n):
        A_eq.append(tuple(ONE if j == r else ZERO for j in range(n)) + tuple(g[r] for g in gens))
        b_eq.append(ZERO)
    res = linprog([ZERO] * (n + k), A_ub, b_ub, A_eq, b_eq, nonneg=range(n, n + k))
    if res.status != "optimal":
        return None
    x0 = res.x[:n]
    parts, lims = {}, []
    for mu, g, i in zip(res.x[n:], gens, owner):
        if not mu:
            continue
        if i is None:
            lims.append((mu, g))
        else:
            parts[i] = eg.add(parts.get(i, (ZERO,) * n), eg.scale(mu, g))
    homes = {i: normals[i].pieces[0] for i in parts}
    return x0, parts, homes, tuple(lims)
