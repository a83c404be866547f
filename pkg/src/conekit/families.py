"""CHIP and related properties of countable set systems."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import exactgeom as eg
from . import setalg as sa
from . import varcalc as vc
from .exactgeom import ConeRep, ConvexPolyCone, dot, vec
from .templates import RatFunc, limit_direction

ZERO = Fraction(0)


@dataclass(frozen=True)
class ChipVerdict:
    holds: str  # "yes" | "no" | "inconclusive-at-K" | "not-applicable"
    K_used: int
    witness: tuple | None = None
    method: str = ""
    left: ConeRep | None = field(default=None, compare=False)
    right: ConeRep | None = field(default=None, compare=False)
    exact: bool = True
    prop: str = "CHIP"
    note: str = ""


@dataclass(frozen=True)
class RegularityEstimate:
    C_hat: float
    trend: str  # "bounded" | "growing"
    exact: bool
    per_radius: tuple
    grid: dict = field(default_factory=dict, compare=False)
    flagged: str = ""


@dataclass(frozen=True)
class RankResult:
    value: object
    exact: bool
    certificate: str
    verdict: ChipVerdict | None = None


@lru_cache(maxsize=8192)
def _tangent(S, x):
    return vc.tangent_cone(S, x)


def _check_members(F, x, K):
    for i in F.indices(K):
        if not sa.member(F.instantiate(i), x):
            raise vc.DomainError(f"base point not in member {i}")


def _default_K(F, K):
    if F.is_finite:
        return len(F.members)
    return K if K is not None else F.policy.K_init


def _apex_cone_family(F, x):
    """True when every member is a polyhedral cone with apex ``x`` (checked symbolically)."""
    if F.is_finite:
        objs = F.members
    else:
        objs = (F.template,)
    for S in objs:
        try:
            flat = sa.flatten(S)
        except sa.Unsupported:
            return False
        for p in flat.pieces:
            if p.quads:
                return False
            A, b = p.rows()
            for a, bi in zip(A, b):
                res = sum((c * xi for c, xi in zip(a, x)), ZERO) - bi
                if isinstance(res, RatFunc):
                    if not res.is_zero():
                        return False
                elif res != 0:
                    return False
    return True


def truncated_tangent_intersection(F, x, K):
    """``cap_{i <= K} T(x; Omega_i)`` together with the member cones."""
    cones = [_tangent(F.instantiate(i), x) for i in F.indices(K)]
    acc = cones[0].cone
    for c in cones[1:]:
        acc = eg.intersect_reps(acc, c.cone)
    return acc, cones


def _left_side(F, x, K):
    """Exact ``T(x; cap Omega_i)`` over all indices when available."""
    if F.is_finite:
        return vc.tangent_cone(sa.Intersection(F.members), x).cone, "finite"
    if F.is_constant():
        return _tangent(F.template, x).cone, "constant"
    try:
        L = sa.limit_expr(F)
    except sa.Unsupported as exc:
        return None, str(exc)
    return vc.tangent_cone(L, x).cone, "limit-set"


def chip_check(F, x, K=None):
    """Conical hull intersection property of the family at ``x``."""
    x = vec(x)
    K = _default_K(F, K)
    _check_members(F, x, K)
    if F.is_finite or F.is_constant():
        left, _ = _left_side(F, x, K)
        right, _ = truncated_tangent_intersection(F, x, K)
        return _compare(left, right, K, "finite" if F.is_finite else "constant-template")
    if _apex_cone_family(F, x):
        right, _ = truncated_tangent_intersection(F, x, K)
        left, how = _left_side(F, x, K)
        return ChipVerdict("yes", K, None, "apex-cone", left, right, True,
                           note="every member is a closed cone with apex at the base point")
    left, how = _left_side(F, x, K)
    right = _scan_right(F, x, K)
    if left is None:
        rank = tangential_rank(F, x, K)
        if rank.verdict is not None and rank.verdict.holds == "yes":
            return rank.verdict
        inv = invex_chip_check(F, x, K)
        if inv.holds == "yes":
            return inv
        return ChipVerdict("inconclusive-at-K", K, None, "no exact intersection: " + how, None, right, False)
    return _compare(left, right, K, "limit-set sandwich")


def _scan_right(F, x, K):
    acc, _ = truncated_tangent_intersection(F, x, K)
    return acc


def _compare(left, right, K, method):
    w = eg.witness_not_subset(right, left)
    if w is None:
        return ChipVerdict("yes", K, None, method, left, right, True)
    return ChipVerdict("no", K, eg.primitive(w), method, left, right, True)


# ---------------------------------------------------------------- asymptotic strong CHIP

def _normal_templates(F, x):
    """Templated active gradients of a convex single-piece family, as RatFunc vectors."""
    if F.is_finite or not sa.is_templated(F.template):
        return []
    flat = sa.flatten(F.template)
    out = []
    for p in flat.pieces:
        A, b = p.A, p.b
        for a, bi in zip(A, b):
            res = sum((RatFunc.lift(c) * xi for c, xi in zip(a, x)), RatFunc.const(0)) - bi
            if RatFunc.lift(res).is_zero():
                out.append(tuple(RatFunc.lift(c) for c in a))
        for Q, qv, c in p.quads:
            n = len(qv)
            val = sum((RatFunc.lift(Q[r][s]) * x[r] * x[s] for r in range(n) for s in range(n)),
                      RatFunc.const(0)) + sum((RatFunc.lift(qv[r]) * x[r] for r in range(n)), RatFunc.const(0)) + c
            if RatFunc.lift(val).is_zero():
                g = tuple(2 * sum((RatFunc.lift(Q[r][s]) * x[s] for s in range(n)), RatFunc.const(0)) + qv[r]
                          for r in range(n))
                out.append(tuple(RatFunc.lift(v) for v in g))
    return out


def limit_normal_directions(F, x, K):
    """Exact limits of normalized templated normals that belong to the member normal cones."""
    dirs = []
    for g in _normal_templates(F, x):
        d = limit_direction(g)
        if d is None:
            continue
        ok = True
        for i in (F.start + K - 1, F.start + max(K // 2, 1) - 1):
            gi = tuple(c(i) for c in g)
            if eg.is_zero(gi):
                continue
            if not vc.frechet_normal_cone(F.instantiate(i), x).cone.contains(gi):
                ok = False
        if ok:
            d = eg.primitive(d)
            if d not in dirs:
                dirs.append(d)
    return dirs


def asymptotic_strong_chip_check(F, x, K=None):
    x = vec(x)
    K = _default_K(F, K)
    _check_members(F, x, K)
    for i in F.indices(K):
        if not vc.is_convex(F.instantiate(i)):
            raise sa.Unsupported("asymptotic strong CHIP is defined for convex families only")
    left_T, how = _left_side(F, x, K)
    if left_T is None:
        return ChipVerdict("inconclusive-at-K", K, None, how, prop="asymptotic-strong-CHIP", exact=False)
    left = eg.polar(left_T)
    normals = [vc.frechet_normal_cone(F.instantiate(i), x).single() for i in F.indices(K)]
    extra = limit_normal_directions(F, x, K)
    gens = []
    for N in normals:
        gens.extend(N.generators)
    gens.extend(extra)
    right = ConvexPolyCone.from_generators(gens, F.dim)
    exact = F.is_finite or F.is_constant()
    if left == right:
        return ChipVerdict("yes", K, None, "limit-directions" if extra else "finite hull", ConeRep((left,)),
                           ConeRep((right,)), exact, prop="asymptotic-strong-CHIP")
    w = eg.witness_not_subset(left, right) or eg.witness_not_subset(right, left)
    return ChipVerdict("no", K, w, "hull comparison", ConeRep((left,)), ConeRep((right,)), exact,
                       prop="asymptotic-strong-CHIP")


# ---------------------------------------------------------------- linear regularity

def _dist2(S, y):
    d = sa.distance(S, y)
    return float(d.sq), d.exact


def _grid(n, angles, radii):
    pts = []
    if n == 1:
        dirs = [(1.0,), (-1.0,)]
    elif n == 2:
        dirs = [(math.cos(2 * math.pi * k / angles), math.sin(2 * math.pi * k / angles)) for k in range(angles)]
    else:
        import random

        rng = random.Random(0)
        dirs = []
        for _ in range(angles):
            v = [rng.gauss(0, 1) for _ in range(n)]
            s = math.sqrt(sum(t * t for t in v))
            dirs.append(tuple(t / s for t in v))
    for r in radii:
        pts.append((r, [tuple(r * t for t in d) for d in dirs]))
    return pts


def linear_regularity_estimate(F, x, K=None, angles=24, radii=(1e-1, 1e-2, 1e-3), only_in=None):
    """Sampled ``sup dist(y; cap)/sup_i dist(y; Omega_i)`` near ``x``.

    Besides the plain grid, grid points are pushed onto each member so that
    boundary behaviour is seen. ``only_in`` restricts to points of one member.
    """
    x = vec(x)
    K = _default_K(F, K)
    members = [F.instantiate(i) for i in F.indices(K)]
    inter = _intersection_expr(members, x)
    exact = True
    per_radius = []
    degenerate = True
    for r, offsets in _grid(F.dim, angles, radii):
        worst = 0.0
        pts = []
        for off in offsets:
            y = tuple(float(xi) + o for xi, o in zip(x, off))
            pts.append(y)
            for S in members:
                pr = _float_proj(S, y)
                if pr is not None:
                    pts.append(pr)
        for y in pts:
            yq = vc._rational(y, 10 ** 12)
            if only_in is not None and not sa.member(members[only_in], yq):
                continue
            num, e1 = _dist2(inter, yq)
            dens = []
            for j, S in enumerate(members):
                if only_in is not None and j == only_in:
                    continue
                d, e2 = _dist2(S, yq)
                dens.append(d)
                exact = exact and e2
            exact = exact and e1
            den = max(dens) if dens else 0.0
            if num <= 1e-30 and den <= 1e-30:
                ratio = 1.0
            elif den <= 1e-30:
                ratio = math.inf
                degenerate = False
            else:
                ratio = math.sqrt(num / den)
                degenerate = False
            worst = max(worst, ratio)
        per_radius.append(worst)
    C_hat = max(max(per_radius), 1.0)
    growing = per_radius[-1] > 4 * max(per_radius[0], 1.0) or math.isinf(per_radius[-1])
    return RegularityEstimate(C_hat, "growing" if growing else "bounded", exact, tuple(per_radius),
                              {"angles": angles, "radii": list(radii), "K": K},
                              "interior point: all ratios 0/0" if degenerate else "")


def _intersection_expr(members, x):
    inter = sa.Intersection(tuple(members)) if len(members) > 1 else members[0]
    # a convex set whose tangent cone at one of its points is {0} is that point
    if vc.is_convex(inter):
        T = vc.tangent_cone(inter, x)
        if len(T.pieces) == 1 and T.pieces[0].is_zero():
            n = len(x)
            A = [tuple(Fraction(int(j == k)) * s for j in range(n)) for k in range(n) for s in (1, -1)]
            b = [x[k] * s for k in range(n) for s in (1, -1)]
            return sa.Polyhedral(tuple(A), tuple(b), n)
    return inter


def _float_proj(S, y):
    flat = sa.flatten(S)
    best, bp = None, None
    for p in flat.pieces:
        pr = vc._project_piece_float(p, y)
        if pr is None:
            continue
        d = sum((a - b) ** 2 for a, b in zip(y, pr))
        if best is None or d < best:
            best, bp = d, pr
    return bp


def equi_dir_diff_check(F, x, directions=None, t_grid=None, K=None, tol=1e-2):
    """Uniform-in-i convergence of distance quotients to the tangent-cone distance."""
    x = vec(x)
    K = _default_K(F, K)
    n = F.dim
    if directions is None:
        directions = [tuple(Fraction(int(j == k)) * s for j in range(n)) for k in range(n) for s in (1, -1)]
    t_grid = t_grid or [Fraction(1, 2 ** k) for k in range(1, 9)]
    worst = []
    for t in t_grid:
        dev = 0.0
        for h in directions:
            h = vec(h)
            for i in F.indices(K):
                S = F.instantiate(i)
                y = tuple(xi + t * hi for xi, hi in zip(x, h))
                d, _ = _dist2(S, y)
                quot = math.sqrt(d) / float(t)
                T = _tangent(S, x)
                target = min(math.sqrt(float(eg.dist2(eg.Polyhedron(C.inequalities, (ZERO,) * len(C.inequalities), n), h)))
                             for C in T.pieces)
                dev = max(dev, abs(quot - target))
        worst.append(dev)
    passed = worst[-1] <= tol
    return passed, {"worst_deviation": worst[-1], "per_t": worst, "t_grid": [str(t) for t in t_grid], "K": K}


def chip_via_regularity(F, x, K=None):
    K = _default_K(F, K)
    est = linear_regularity_estimate(F, x, K)
    ok, rep = equi_dir_diff_check(F, x, K=K)
    if est.trend == "bounded" and ok:
        return ChipVerdict("yes", K, None, "certified-by-sampled-hypothesis", exact=False,
                           note=f"C_hat={est.C_hat:.6g}")
    return ChipVerdict("inconclusive-at-K", K, None, "regularity hypotheses not met", exact=False)


# ---------------------------------------------------------------- tangential rank

def _poly_subset(P, Q):
    """Exact containment of polyhedral flats (single convex pieces)."""
    from .lp import linprog

    A, b = P.rows()
    QA, Qb = Q.rows()
    for a, bi in zip(QA, Qb):
        res = linprog([-c for c in a], A, b)
        if res.status == "unbounded" or (res.status == "optimal" and -res.value > bi):
            return False
    return True


def tangential_rank(F, x, K=None, angles=24, radii=(1e-1, 1e-2, 1e-3)):
    x = vec(x)
    K = _default_K(F, K)
    members = [F.instantiate(i) for i in F.indices(K)]
    for i, S in zip(F.indices(K), members):
        T = _tangent(S, x)
        if vc.is_convex(S) and len(T.pieces) == 1 and T.pieces[0].is_zero():
            v = ChipVerdict("yes", K, None, "tangential-rank-zero", exact=True,
                            note=f"member {i} is the singleton base point")
            return RankResult(ZERO, True, f"member {i} equals {{x}}", v)
    # nested member: Omega_i inside every other member
    try:
        target = sa.limit_set(F) if not F.is_finite else sa.flatten(sa.Intersection(F.members))
    except sa.Unsupported:
        target = None
    if target is not None and len(target.pieces) == 1 and target.pieces[0].polyhedral:
        for i, S in zip(F.indices(K), members):
            fl = sa.flatten(S)
            if len(fl.pieces) == 1 and fl.pieces[0].polyhedral and _poly_subset(fl.pieces[0], target.pieces[0]):
                v = ChipVerdict("yes", K, None, "tangential-rank-zero", exact=True,
                                note=f"member {i} lies in the whole intersection")
                return RankResult(ZERO, True, f"member {i} is contained in the intersection", v)
    inter = _intersection_expr(members, x)
    best = math.inf
    for S in members:
        worst = 0.0
        for r, offsets in _grid(F.dim, angles, radii[-1:]):
            for off in offsets:
                y = tuple(float(xi) + o for xi, o in zip(x, off))
                p = _float_proj(S, y)
                if p is None:
                    continue
                pq = vc._rational(p, 10 ** 12)
                nrm = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(pq, x)))
                if nrm < 1e-12:
                    continue
                d, _ = _dist2(inter, pq)
                worst = max(worst, math.sqrt(d) / nrm)
        best = min(best, worst)
    return RankResult(best, False, "sampled", None)


# ---------------------------------------------------------------- invex-type sets

def _strict_interior(S, x):
    flat = sa.flatten(S)
    for p in flat.pieces:
        A, b = p.rows()
        if all(dot(a, x) < bi for a, bi in zip(A, b)) and all(sa.qeval(qd, x) < 0 for qd in p.quads):
            return True
    return False


def invex_lemma_check(A_set, x, ts=(Fraction(1, 2), Fraction(1, 16), Fraction(1, 256))):
    """Sampled check of ``x + T(x; A) subset A`` on tangent generators."""
    T = vc.tangent_cone(A_set, x)
    for C in T.pieces:
        for g in C.generators:
            for t in ts:
                if not sa.member(A_set, tuple(xi + t * gi for xi, gi in zip(x, g))):
                    return False
    return True


def invex_chip_check(F, x, K=None):
    x = vec(x)
    K = _default_K(F, K)
    J, lemma_ok = [], True
    for i in F.indices(K):
        S = F.instantiate(i)
        if isinstance(S, sa.Complement):
            P = eg.Polyhedron(S.A, S.b, S.dim)
            if not sa.member(S, x):
                raise vc.DomainError(f"base point not in member {i}")
            if P.contains(x):
                J.append(i)
                lemma_ok = lemma_ok and invex_lemma_check(S, x)
                continue
            continue  # outside the closed convex part: interior of the complement
        if not _strict_interior(S, x):
            return ChipVerdict("not-applicable", K, None, "invex-type", exact=True,
                               note=f"member {i} is neither a complement of a convex set nor has x inside")
    return ChipVerdict("yes", K, None, "invex-type", exact=True,
                       note=f"boundary indices {J}; lemma check {'passed' if lemma_ok else 'failed'}")
