"""Qualification and closedness conditions for countable systems."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from . import exactgeom as eg
from . import setalg as sa
from . import varcalc as vc
from .exactgeom import ConvexPolyCone, dot, vec
from .families import _default_K, _normal_templates
from .lp import linprog
from .templates import RatFunc, limit_direction, negative_for_all

ZERO = Fraction(0)
ONE = Fraction(1)
PIECE_CHOICE_CAP = 256


@dataclass(frozen=True)
class QCVerdict:
    condition: str
    holds: str  # "yes" | "no" | "inconclusive-at-K"
    K_used: int
    witness: object = None
    method: str = ""
    exact: bool = True
    note: str = ""
    data: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------- vanishing-sum engine

def _vanishing_sum(cones):
    """Nonzero elements ``x_i`` of the convex cones with ``sum x_i = 0``, or ``None``.

    ``cones`` is a list of ConvexPolyCone. Exact: for some ``j`` the cone
    ``C_j`` meets ``-(sum of the others)`` outside the origin.
    """
    n = cones[0].dim
    for j, Cj in enumerate(cones):
        others = [C for k, C in enumerate(cones) if k != j]
        S = eg.conic_sum(others, n) if others else ConvexPolyCone.zero(n)
        meet = eg.intersect(Cj, ConvexPolyCone.from_generators([eg.scale(-1, g) for g in S.generators], n))
        if meet.is_zero():
            continue
        v = meet.generators[0]
        # express -v as a sum of elements of the other cones
        gens, owner = [], []
        for k, C in enumerate(cones):
            if k == j:
                continue
            for g in C.generators:
                gens.append(g)
                owner.append(k)
        parts = {j: v}
        if gens:
            m = len(gens)
            A_eq = [tuple(g[r] for g in gens) for r in range(n)]
            res = linprog([ZERO] * m, (), (), A_eq, [-c for c in v], nonneg=range(m))
            for mu, g, k in zip(res.x, gens, owner):
                if mu:
                    parts[k] = eg.add(parts.get(k, (ZERO,) * n), eg.scale(mu, g))
        total = (ZERO,) * n
        for p in parts.values():
            total = eg.add(total, p)
        assert eg.is_zero(total)
        return parts
    return None


def _normalize_witness(parts, cones):
    """Multipliers over generators with ``sum mu g = 0`` and ``sum mu = 1``."""
    n = cones[0].dim
    gens, mus = [], []
    for k in sorted(parts):
        C = cones[k]
        G = list(C.generators)
        m = len(G)
        A_eq = [tuple(g[r] for g in G) for r in range(n)]
        res = linprog([ZERO] * m, (), (), A_eq, list(parts[k]), nonneg=range(m))
        for mu, g in zip(res.x, G):
            if mu:
                gens.append((k, g))
                mus.append(mu)
    s = sum(mus, ZERO)
    mus = [mu / s for mu in mus]
    total = (ZERO,) * n
    for mu, (_, g) in zip(mus, gens):
        total = eg.add(total, eg.scale(mu, g))
    return {"generators": gens, "mu": mus, "sum": total, "mu_total": sum(mus, ZERO)}


def conic_qc_check(cones, condition="conicQC"):
    """Only the trivial choice of elements of the cones sums to zero (finite list)."""
    reps = [eg.as_rep(c) for c in cones]
    choices = 1
    for r in reps:
        choices *= len(r.pieces)
    if choices > PIECE_CHOICE_CAP:
        return QCVerdict(condition, "inconclusive-at-K", len(reps), method="too many piece choices", exact=False)
    exact = all(r.exact for r in reps)
    for pick in itertools.product(*[r.pieces for r in reps]):
        parts = _vanishing_sum(list(pick))
        if parts is not None:
            wit = _normalize_witness(parts, list(pick))
            wit["normals"] = {k: parts[k] for k in sorted(parts)}
            return QCVerdict(condition, "no", len(reps), wit, "exact vanishing combination", exact)
    return QCVerdict(condition, "yes", len(reps), None, "no vanishing combination", exact)


def _separator(gens, limits, n):
    """``w`` with ``g.w <= -1`` for all generators and ``d.w <= 0`` for limit directions.

    Minimises ``|w|_1`` so the certificate is small and deterministic.
    """
    A, b = [], []
    pad = (ZERO,) * n
    for g in gens:
        A.append(tuple(g) + pad)
        b.append(-ONE)
    for d in limits:
        A.append(tuple(d) + pad)
        b.append(ZERO)
    for k in range(n):
        e = tuple(ONE if j == k else ZERO for j in range(n))
        A.append(e + eg.scale(-1, e))
        b.append(ZERO)
        A.append(eg.scale(-1, e) + eg.scale(-1, e))
        b.append(ZERO)
    res = linprog([ZERO] * n + [ONE] * n, A, b)
    return res.x[:n] if res.status == "optimal" else None


def _template_negative(templates, w, start):
    for g in templates:
        val = sum((RatFunc.lift(c) * wi for c, wi in zip(g, w)), RatFunc.const(0))
        if not negative_for_all(val, start):
            return False
    return True


def _family_qc(F, x, K, cones, templates, condition):
    """NQC-type verdict for cones ``cones[i]`` (i <= K) of a family with generator templates."""
    v = conic_qc_check(cones, condition)
    if v.holds != "yes":
        return QCVerdict(condition, v.holds, K, v.witness, v.method, v.exact, data=v.data)
    if F.is_finite:
        return QCVerdict(condition, "yes", K, None, "finite family, exact", v.exact)
    if F.is_constant():
        return QCVerdict(condition, "yes", K, None, "constant template", v.exact)
    n = F.dim
    gens = []
    for c in cones:
        for p in eg.as_rep(c).pieces:
            gens.extend(p.generators)
    limits = [limit_direction(g) for g in templates]
    limits = [d for d in limits if d is not None]
    w = _separator(gens, limits, n)
    if w is not None and templates and _template_negative(templates, w, F.start):
        return QCVerdict(condition, "yes", K, None, "template separation", v.exact,
                         note="all templated generators lie in an open halfspace for every index",
                         data={"w": w})
    return QCVerdict(condition, "inconclusive-at-K", K, None, "no vanishing combination at K", False)


def _verified_templates(F, x, K, cone_of):
    """Normal templates whose values at sampled indices generate the member cones."""
    tmpl = _normal_templates(F, x)
    if not tmpl:
        return []
    for i in sorted({F.start, F.start + K - 1}):
        gi = [tuple(c(i) for c in g) for g in tmpl]
        C = ConvexPolyCone.from_generators([g for g in gi if not eg.is_zero(g)], F.dim)
        target = cone_of(i)
        if len(target.pieces) != 1 or target.pieces[0] != C:
            return []
    return tmpl


def nqc_check(F, x, K=None):
    """Normal qualification condition of the family at ``x``."""
    x = vec(x)
    K = _default_K(F, K)
    normals = {}
    for i in F.indices(K):
        normals[i] = vc.limiting_normal_cone(F.instantiate(i), x).cone
    if not all(c.exact for c in normals.values()):
        v = conic_qc_check(list(normals.values()), "NQC")
        return QCVerdict("NQC", v.holds if v.holds == "no" else "inconclusive-at-K", K, v.witness,
                         "sampled normal cones", False)
    tmpl = [] if F.is_finite else _verified_templates(F, x, K, lambda i: normals[i])
    return _family_qc(F, x, K, list(normals.values()), tmpl, "NQC")


def interior_point_nqc(F, x, K=None, i0=None):
    """Sufficient condition: a point of one member strictly inside all the others."""
    x = vec(x)
    K = _default_K(F, K)
    idx = list(F.indices(K))
    members = [F.instantiate(i) for i in idx]
    for S in members:
        if not vc.is_convex(S):
            raise sa.Unsupported("interior-point condition needs convex members")
    flats = [sa.flatten(S) for S in members]
    order = [i0] if i0 is not None else idx
    for j0 in order:
        k0 = idx.index(j0)
        w = None
        if all(f.pieces[0].polyhedral and len(f.pieces) == 1 for f in flats):
            w = _lp_interior(flats, k0, F.dim)
        if w is None:
            w = _candidate_interior(flats, k0, x, F.dim)
        if w is None:
            continue
        if F.is_finite or F.is_constant():
            return QCVerdict("interior-point", "yes", K, w, "exact interior point", True, data={"i0": j0})
        if _templated_strict(F, w, j0):
            return QCVerdict("interior-point", "yes", K, w, "interior point certified for every index", True,
                             data={"i0": j0})
        return QCVerdict("interior-point", "inconclusive-at-K", K, w, "strict at truncation only", False,
                         data={"i0": j0})
    return QCVerdict("interior-point", "inconclusive-at-K", K, None, "no interior point found", False)


def _lp_interior(flats, k0, n):
    A, b = [], []
    for k, f in enumerate(flats):
        P, Pb = f.pieces[0].rows()
        for a, bi in zip(P, Pb):
            A.append(tuple(a) + ((ZERO,) if k == k0 else (ONE,)))
            b.append(bi)
    A.append((ZERO,) * n + (ONE,))
    b.append(ONE)
    res = linprog([ZERO] * n + [-ONE], A, b)
    if res.status != "optimal" or res.x[-1] <= 0:
        return None
    return res.x[:-1]


def _strictly_inside(f, w):
    for p in f.pieces:
        A, b = p.rows()
        if all(dot(a, w) < bi for a, bi in zip(A, b)) and all(sa.qeval(qd, w) < 0 for qd in p.quads):
            return True
    return False


def _candidate_interior(flats, k0, x, n):
    dirs = [tuple(Fraction(int(j == k)) * s for j in range(n)) for k in range(n) for s in (1, -1)]
    dirs += [tuple(Fraction(s[j]) for j in range(n)) for s in itertools.product((1, -1), repeat=n)]
    for t in [Fraction(1, 2 ** k) for k in range(0, 8)]:
        for d in dirs:
            w = tuple(xi + t * di for xi, di in zip(x, d))
            if not any(p.contains(w) for p in flats[k0].pieces):
                continue
            if all(_strictly_inside(f, w) for k, f in enumerate(flats) if k != k0):
                return w
    return None


def _templated_strict(F, w, i0):
    """Every member other than ``i0`` holds ``w`` in its interior, for all indices."""
    flat = sa.flatten(F.template)
    for p in flat.pieces:
        if sa.is_templated((p.RA, p.Rb)):
            return False
    # pick the piece whose (constant) region holds w strictly, if any
    home = [p for p in flat.pieces if all(dot(a, w) < bi for a, bi in zip(p.RA, p.Rb))]
    if len(flat.pieces) > 1 and not home:
        return False
    p = home[0] if home else flat.pieces[0]
    vals = []
    for a, bi in zip(p.A, p.b):
        vals.append(sum((RatFunc.lift(c) * wi for c, wi in zip(a, w)), RatFunc.const(0)) - bi)
    n = len(w)
    for Q, qv, c in p.quads:
        val = sum((RatFunc.lift(Q[r][s]) * w[r] * w[s] for r in range(n) for s in range(n)), RatFunc.const(0))
        val = val + sum((RatFunc.lift(qv[r]) * w[r] for r in range(n)), RatFunc.const(0)) + c
        vals.append(val)
    for v in vals:
        v = RatFunc.lift(v)
        for i in range(F.start, i0 + 1):
            if i != i0 and v(i) >= 0:
                return False
        if not negative_for_all(v, i0 + 1):
            return False
    return True


# ---------------------------------------------------------------- closedness

def _closedness(F, K, gens_at, templates, condition, extra_gens=()):
    """Closedness semi-decision for ``cone(union of generators)``.

    ``gens_at(K)`` lists the generators of the first K members; ``templates``
    are RatFunc generator vectors valid for every index.
    """
    n = len(templates[0]) if templates else None
    checkpoints = sorted({max(1, K // 4), max(1, K // 2), K})
    G = {k: list(gens_at(k)) + list(extra_gens) for k in checkpoints}
    if n is None:
        n = len(G[K][0]) if G[K] else F.dim
    if F.is_finite:
        return QCVerdict(condition, "yes", K, None, "finitely generated cone", True)
    if F.is_constant() or (templates and all(all(not isinstance(c, RatFunc) or c.is_constant() for c in g)
                                             for g in templates)):
        return QCVerdict(condition, "yes", K, None, "constant generators: finitely generated cone", True)
    limits = []
    for g in templates:
        d = limit_direction(g)
        if d is not None:
            d = eg.primitive(d)
            if d not in limits:
                limits.append(d)
    for d in limits:
        outside = all(not ConvexPolyCone.from_generators(G[k], n).contains(d) for k in checkpoints)
        if outside:
            return QCVerdict(condition, "no", K, d, "limit direction outside the hull at every truncation", True,
                             data={"checkpoints": checkpoints})
    C = ConvexPolyCone.from_generators(G[K] + limits, n)
    if templates and eg.is_pointed(C):
        return QCVerdict(condition, "yes", K, None, "template limits inside a pointed hull", True,
                         note="closure adds only limit directions, all already generated")
    return QCVerdict(condition, "inconclusive-at-K", K, None, "closedness undecided at truncation", False)


def ncc_check(F, x, K=None):
    """Normal closedness condition: the cone of all member normals is closed."""
    x = vec(x)
    K = _default_K(F, K)
    cache = {}

    def N(i):
        if i not in cache:
            cache[i] = vc.limiting_normal_cone(F.instantiate(i), x).cone
        return cache[i]

    def gens_at(k):
        out = []
        for i in F.indices(k):
            for p in N(i).pieces:
                out.extend(p.generators)
        return out

    tmpl = [] if F.is_finite else _verified_templates(F, x, K, N)
    return _closedness(F, K, gens_at, tmpl, "NCC")


# ---------------------------------------------------------------- inequality systems

def _is_active(atom, x):
    return atom.value(x) == 0


def _template_gradients(F, x):
    """Templated gradients at ``x`` of the pieces of a templated atom whose region contains ``x``."""
    if F.is_finite or not sa.is_templated(F.template):
        return []
    at = F.template
    n = at.dim
    out = []
    for p in at.pieces:
        if sa.is_templated((p.A, p.b)):
            return []
        if not p.in_region(x):
            continue
        g = tuple(RatFunc.lift(2 * sum((RatFunc.lift(p.Q[r][s]) * x[s] for s in range(n)), RatFunc.const(0))
                               + p.qv[r]) for r in range(n))
        if g not in out:
            out.append(g)
    return out


def _template_always_active(F, x):
    at = F.template
    for p in at.pieces:
        if p.in_region(x):
            n = at.dim
            val = sum((RatFunc.lift(p.Q[r][s]) * x[r] * x[s] for r in range(n) for s in range(n)),
                      RatFunc.const(0)) + sum((RatFunc.lift(p.qv[r]) * x[r] for r in range(n)),
                                              RatFunc.const(0)) + p.c
            return RatFunc.lift(val).is_zero()
    return False


def _subgrad_cone(atom, x):
    sd = vc.subdifferential(atom, x, "basic")
    return ConvexPolyCone.from_generators(list(sd.points), atom.dim)


def scc_check(F, x, K=None):
    """Subdifferential closedness condition for an atom family at ``x``."""
    x = vec(x)
    K = _default_K(F, K)
    act = [i for i in F.indices(K) if _is_active(F.instantiate(i), x)]

    def gens_at(k):
        out = []
        for i in F.indices(k):
            if i in act:
                out.extend(vc.subdifferential(F.instantiate(i), x, "basic").points)
        return out

    tmpl = []
    if not F.is_finite and sa.is_templated(F.template):
        if not _template_always_active(F, x):
            return QCVerdict("SCC", "inconclusive-at-K", K, None, "active set varies with the index", False)
        tmpl = _template_gradients(F, x)
    if not act:
        return QCVerdict("SCC", "yes", K, None, "no active constraints", True)
    return _closedness(F, K, gens_at, tmpl, "SCC")


def sqc_check(F, x, K=None):
    """Subdifferential qualification condition for an atom family at ``x``."""
    x = vec(x)
    K = _default_K(F, K)
    for i in F.indices(K):
        if not F.instantiate(i).lipschitz:
            raise sa.Unsupported("SQC requires locally Lipschitz constraints")
    act = [i for i in F.indices(K) if _is_active(F.instantiate(i), x)]
    if not act:
        return QCVerdict("SQC", "yes", K, None, "no active constraints (vacuous)", True)
    cones = [_subgrad_cone(F.instantiate(i), x) for i in act]
    tmpl = []
    if not F.is_finite and sa.is_templated(F.template):
        if _template_always_active(F, x):
            tmpl = _template_gradients(F, x)
    v = _family_qc(F, x, K, cones, tmpl, "SQC")
    if v.holds == "no":
        wit = dict(v.witness)
        wit["active"] = act
        return QCVerdict("SQC", "no", K, wit, v.method, v.exact)
    return v


# ---------------------------------------------------------------- conjugate-epigraph conditions

LAMBDA_GRID = tuple(Fraction(k, 2) for k in range(0, 9))
SEED_LAMBDAS = (ZERO, ONE, Fraction(4))


def _conj_sup(spec, w):
    """``sup { <w, y> : y in epi conj }`` for a ConjugateSpec (exact)."""
    n = len(spec.p)
    wx, wt = w[:n], w[n]
    if wt > 0:
        return None  # unbounded upward ray
    A = wt * spec.alpha
    B = dot(wx, spec.d) + wt * spec.beta
    C = dot(wx, spec.p) + wt * spec.gamma
    if A > 0:
        return None
    if A == 0:
        if B > 0:
            return None
        return C, ZERO
    lam = max(ZERO, -B / (2 * A))
    return A * lam * lam + B * lam + C, lam


SEPARATION_MARGIN = Fraction(1, 64)


def _separator_ok(w, specs, base_specs, z):
    """Exact check of a candidate; returns the base level ``sigma`` or ``None``."""
    for s in specs:
        sup = _conj_sup(s, w)
        if sup is None or sup[0] > 0:
            return None
    sigma = ZERO
    for k, s in enumerate(base_specs):
        sup = _conj_sup(s, w)
        if sup is None:
            return None
        sigma = sup[0] if k == 0 else max(sigma, sup[0])
    return sigma if dot(w, z) > sigma else None


def _separate(points_sets, specs, z, base_specs=()):
    """Exact hyperplane separating ``z`` from ``base + cone(union epi conj)``.

    Returns ``w`` or ``None``. ``points_sets`` are initial sample points for the
    cone part, ``base_specs`` describe the (convex) base set ``base``. Sample
    points get a small margin and each iterate is also tried with its
    non-vertical part shrunk, which settles quadratic pieces without waiting
    for the cutting planes to converge.
    """
    m = len(z)
    up = tuple(ZERO if j < m - 1 else ONE for j in range(m))
    cone_pts = [list(ps) for ps in points_sets]
    base_pts = [[s.point(l) for l in SEED_LAMBDAS] for s in base_specs]
    for _ in range(40):
        # variables: w (m), sigma (1); maximise <w, z> - sigma
        A, b = [], []
        for ps in cone_pts:
            for y in ps:
                A.append(tuple(y) + (ZERO,))
                b.append(ZERO if tuple(y) == up else -SEPARATION_MARGIN)
        for ps in base_pts:
            for y in ps:
                A.append(tuple(y) + (-ONE,))
                b.append(ZERO)
        A.append(up + (ZERO,))
        b.append(ZERO)
        for k in range(m):
            e = tuple(ONE if j == k else ZERO for j in range(m)) + (ZERO,)
            A.append(e)
            b.append(ONE)
            A.append(eg.scale(-1, e))
            b.append(ONE)
        if not base_specs:
            A.append((ZERO,) * m + (ONE,))
            b.append(ZERO)
            A.append((ZERO,) * m + (-ONE,))
            b.append(ZERO)
        res = linprog([-c for c in z] + [ONE], A, b)
        if res.status != "optimal" or -res.value <= 0:
            return None
        w = res.x[:m]
        for k in range(12):
            theta = Fraction(1, 2 ** k)
            cand = tuple(c * theta for c in w[:-1]) + (w[-1],)
            if _separator_ok(cand, specs, base_specs, z) is not None:
                return cand
        for k, s in enumerate(specs):
            sup = _conj_sup(s, w)
            if sup is not None and sup[0] > -SEPARATION_MARGIN:
                cone_pts[k].append(s.point(sup[1]))
        for k, s in enumerate(base_specs):
            sup = _conj_sup(s, w)
            if sup is not None and sup[0] > res.x[m]:
                base_pts[k].append(s.point(sup[1]))
    return None


def _limit_point(spec, lam):
    """``lim_i`` of the templated conjugate-graph point at ``lam``, if finite."""
    out = []
    pt = spec.point(lam) if not sa.is_templated(spec) else None
    if pt is not None:
        return pt
    n = len(spec.p)
    lam = Fraction(lam)
    comps = [RatFunc.lift(spec.p[k]) + RatFunc.lift(spec.d[k]) * lam for k in range(n)]
    comps.append(RatFunc.lift(spec.alpha) * lam * lam + RatFunc.lift(spec.beta) * lam + RatFunc.lift(spec.gamma))
    for c in comps:
        deg = c.degree
        if deg is None:
            out.append(ZERO)
        elif deg > 0:
            return None
        elif deg == 0:
            out.append(c.lead)
        else:
            out.append(ZERO)
    return tuple(out)


def _conj_specs(F, K):
    specs = []
    for i in F.indices(K):
        at = F.instantiate(i)
        if at.conj is None:
            raise sa.Unsupported("atom without a conjugate oracle")
        if not at.convex:
            raise sa.Unsupported("conjugate conditions need convex atoms")
        specs.append(at.conj)
    return specs


def _conj_closedness(F, K, condition, objective=None):
    specs = _conj_specs(F, K)
    n = F.dim
    base_specs = ()
    if objective is not None:
        if objective.conj is None:
            raise sa.Unsupported("objective without a conjugate oracle")
        base_specs = (objective.conj,)
    if F.is_finite and all(eg.is_zero(s.d) for s in specs):
        return QCVerdict(condition, "yes", K, None, "finitely many affine constraints: polyhedral cone", True)
    if not F.is_finite and not sa.is_templated(F.template):
        if eg.is_zero(specs[0].d):
            return QCVerdict(condition, "yes", K, None, "single affine constraint: polyhedral cone", True)
    if not F.is_finite and sa.is_templated(F.template.conj) and all(eg.is_zero(s.d) for s in specs):
        # affine family: points (a_i, -c_i) plus the vertical ray
        spec = F.template.conj
        tmpl = [tuple(RatFunc.lift(c) for c in spec.p) + (RatFunc.lift(spec.gamma),)]
        up = tuple(ZERO for _ in range(n)) + (ONE,)

        def gens_at(k):
            return [s.point(0) for s in specs[:k]]

        v = _closedness(F, K, gens_at, tmpl, condition, extra_gens=(up,))
        if v.holds != "no" or objective is None:
            return v
        # the same limit point shifted by the objective's conjugate base point
        z = eg.add(v.witness, objective.conj.point(0))
        return QCVerdict(condition, "no", K, z, v.method, v.exact)
    if F.is_finite:
        return QCVerdict(condition, "inconclusive-at-K", K, None, "finite nonaffine family", False)
    checkpoints = sorted({max(1, K // 4), K})
    for lam in LAMBDA_GRID[1:]:
        z = _limit_point(F.template.conj, lam)
        if z is None:
            continue
        if objective is not None:
            z = eg.add(z, objective.conj.point(0))
        ok = True
        cert = {}
        for k in checkpoints:
            pts = [[s.point(l) for l in SEED_LAMBDAS] for s in specs[:k]]
            pts[0].append(tuple(ZERO for _ in range(n)) + (ONE,))
            w = _separate(pts, specs[:k], z, base_specs)
            if w is None:
                ok = False
                break
            cert[k] = w
        if ok:
            return QCVerdict(condition, "no", K, z, "limit point of conjugate graphs separated at every truncation",
                             True, data={"lambda": lam, "separators": cert})
    return QCVerdict(condition, "inconclusive-at-K", K, None, "no escaping limit point found", False)


def fmcq_check(F, K=None):
    """Farkas-Minkowski qualification for a convex atom family (closedness of the conjugate cone)."""
    K = _default_K(F, K)
    return _conj_closedness(F, K, "FMCQ")


def cqc_check(objective, F, K=None):
    """Closedness qualification condition for objective ``objective`` and constraints ``F``."""
    K = _default_K(F, K)
    fm = _conj_closedness(F, K, "FMCQ")
    if fm.holds == "yes":
        return QCVerdict("CQC", "yes", K, None, "implied by FMCQ", fm.exact)
    return _conj_closedness(F, K, "CQC", objective)
