"""Tangent cones, normal cones, subdifferentials and coderivatives.

Exact results come from the local structure of flattened set expressions:
active linear rows plus a second-order test for active quadratic
constraints. Anything outside that whitelist is answered by the sampling
oracles and flagged inexact.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import exactgeom as eg
from . import setalg as sa
from .exactgeom import ConeRep, ConvexPolyCone, MalformedInput, dot, vec
from .lp import linprog

ZERO = Fraction(0)
ONE = Fraction(1)


class DomainError(ValueError):
    """The base point does not belong to the set."""


class UnsupportedFlavor(Exception):
    """No closed form for the requested subdifferential."""


class _NeedSampling(Exception):
    pass


@dataclass(frozen=True)
class ConeResult:
    cone: ConeRep
    exact: bool
    method: str  # "closed-form" | "face-enumeration" | "sampled"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def pieces(self):
        return self.cone.pieces

    def single(self):
        if len(self.cone.pieces) != 1:
            raise ValueError("cone is a union of several pieces")
        return self.cone.pieces[0]


# ---------------------------------------------------------------- matrix helpers

def _det(M):
    M = [list(r) for r in M]
    n = len(M)
    det = ONE
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return ZERO
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


def is_psd(R):
    n = len(R)
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            if _det([[R[a][b] for b in S] for a in S]) < 0:
                return False
    return True


def _restrict(M, B):
    """B^T M B for a basis B given as a list of vectors."""
    n = len(M)
    MB = [[sum((M[r][s] * b[s] for s in range(n)), ZERO) for r in range(n)] for b in B]
    return [[dot(B[i], MB[j]) for j in range(len(B))] for i in range(len(B))]


def _combine(B, coeffs):
    n = len(B[0])
    return tuple(sum((c * b[k] for c, b in zip(coeffs, B)), ZERO) for k in range(n))


# ---------------------------------------------------------------- face lattice

def _faces(base, H):
    """All faces of ``base`` cut out by subsets of the valid inequalities ``H``."""
    seen = [base]
    todo = [base]
    while todo:
        F = todo.pop()
        for h in H:
            if all(dot(h, g) == 0 for g in F.generators):
                continue
            G = eg.intersect(F, ConvexPolyCone.from_inequalities([h, eg.scale(-1, h)], F.dim))
            if G not in seen:
                seen.append(G)
                todo.append(G)
    return seen


def _piece_tangent(p, x):
    """Tangent cone of one basic piece at a point of it, as a list of convex cones."""
    n = p.dim
    A, b = p.rows()
    act_rows = [a for a, bi in zip(A, b) if dot(a, x) == bi and not eg.is_zero(a)]
    act_quads = []
    for qd in p.quads:
        if sa.qeval(qd, x) == 0:
            act_quads.append((qd[0], sa.qgrad(qd, x)))
    H = act_rows + [g for _, g in act_quads if not eg.is_zero(g)]
    base = ConvexPolyCone.from_inequalities(H, n)
    if not act_quads:
        return [base], "closed-form"
    out = []
    for F in _faces(base, H):
        gens = F.generators
        tight_rows = [a for a in act_rows if all(dot(a, g) == 0 for g in gens)]
        tight_q = [(Q, g) for Q, g in act_quads if all(dot(g, v) == 0 for v in gens)]
        # span of the face
        span = eg.rref(list(gens))[0] if gens else []
        if tight_q and span:
            k = len(tight_q)
            cols = [g for _, g in tight_q] + tight_rows
            m = len(cols)
            # Y = {u >= 0 : sum u_j cols_j = 0}
            ineqs = [tuple(-ONE if j == r else ZERO for j in range(m)) for r in range(m)]
            for coord in range(n):
                row = tuple(c[coord] for c in cols)
                if not eg.is_zero(row):
                    ineqs.append(row)
                    ineqs.append(tuple(-v for v in row))
            Y = ConvexPolyCone.from_inequalities(ineqs, m)
            B = list(span)
            for y in Y.rays:
                if all(v == 0 for v in y[:k]):
                    continue
                My = [[sum((y[j] * tight_q[j][0][r][s] for j in range(k)), ZERO) for s in range(n)]
                      for r in range(n)]
                if not B:
                    break
                R = _restrict(My, B)
                if is_psd(R):
                    ker = eg.nullspace(R, len(B))
                    B = [_combine(B, c) for c in ker]
                elif is_psd([[-v for v in row] for row in R]):
                    continue
                else:
                    raise _NeedSampling("indefinite curvature on a face")
            V = B
        else:
            V = list(span)
        if not gens:
            out.append(F)
            continue
        # face restricted to span V
        if V:
            eqs = eg.nullspace(V, n)
        else:
            eqs = [tuple(ONE if j == r else ZERO for j in range(n)) for r in range(n)]
        cand = eg.intersect(F, ConvexPolyCone.from_inequalities(
            [e for e in eqs] + [eg.scale(-1, e) for e in eqs], n))
        # keep only if the relative interior of F meets V
        strict = [h for h in H if not all(dot(h, g) == 0 for g in gens)]
        if strict:
            A_ub = list(F.inequalities) + [h for h in strict]
            b_ub = [ZERO] * len(F.inequalities) + [-ONE] * len(strict)
            A_eq = list(eqs)
            res = linprog([ZERO] * n, A_ub, b_ub, A_eq, [ZERO] * len(A_eq))
            if res.status != "optimal":
                continue
        out.append(cand)
    return eg.prune(out), "face-enumeration"


def _merge(pieces):
    pieces = eg.prune(pieces)
    if len(pieces) > 1:
        hull = eg.conic_sum(pieces)
        if eg.cone_subset(hull, ConeRep(tuple(pieces))):
            return [hull]
    return pieces


def tangent_cone(S, x, _flat=None):
    """Contingent cone of ``S`` at ``x``."""
    x = vec(x)
    if isinstance(S, sa.Preimage) and not sa.is_templated(S.M) and S.surjective:
        y = tuple(dot(row, x) + mi for row, mi in zip(S.M, S.m))
        inner = tangent_cone(S.inner, y)
        MT = list(zip(*S.M))
        pieces = []
        for C in inner.pieces:
            rows = [tuple(dot(col, a) for col in MT) for a in C.inequalities]
            pieces.append(ConvexPolyCone.from_inequalities(rows, S.dim))
        return ConeResult(eg.union(pieces, inner.exact), inner.exact, "closed-form", {"rule": "inverse image"})
    flat = _flat or sa.flatten(S)
    if len(x) != flat.dim:
        raise MalformedInput("point dimension mismatch")
    act = [p for p in flat.pieces if p.contains(x)]
    if not act:
        raise DomainError("base point is not in the set")
    pieces, method = [], "closed-form"
    try:
        for p in act:
            cones, m = _piece_tangent(p, x)
            pieces.extend(cones)
            if m != "closed-form":
                method = m
    except _NeedSampling:
        return oracle_tangent(S, x)
    pieces = _merge(pieces)
    return ConeResult(ConeRep(tuple(pieces)), True, method)


def frechet_normal_cone(S, x):
    T = tangent_cone(S, x)
    N = eg.polar(T.cone)
    return ConeResult(ConeRep((N,), T.exact), T.exact, T.method, {"from": "polar of tangent"})


# ---------------------------------------------------------------- convexity / limiting normals

def is_convex(S):
    """Structural convexity (sufficient, never claims convexity wrongly)."""
    if isinstance(S, (sa.Polyhedral, eg.Polyhedron)):
        return True
    if isinstance(S, (sa.LevelSet, sa.Epigraph)):
        return S.atom.convex
    if isinstance(S, sa.Intersection):
        return all(is_convex(p) for p in S.parts)
    if isinstance(S, sa.Preimage):
        return is_convex(S.inner)
    if isinstance(S, sa.Truncated):
        F = S.family
        return all(is_convex(F.instantiate(i)) for i in F.indices(S.K))
    if isinstance(S, sa.Union):
        return len(S.parts) == 1 and is_convex(S.parts[0])
    if isinstance(S, sa.FlatSet):
        f = S.flat
        return len(f.pieces) == 1 and all(is_psd(Q) for Q, _, _ in f.pieces[0].quads)
    return False


def _hyperplanes(cones):
    out = []
    for C in cones:
        for h in list(C.facets) + list(C.eqs):
            h = eg.primitive(h)
            if h not in out and eg.scale(-1, h) not in out:
                out.append(h)
    return out


def normal_cone_of_union(cones):
    """Limiting normal cone at 0 of a finite union of convex polyhedral cones."""
    cones = list(cones)
    n = cones[0].dim
    hs = _hyperplanes(cones)
    results = []

    def witness(signs):
        A_ub, b_ub, A_eq = [], [], []
        for h, s in zip(hs, signs):
            if s < 0:
                A_ub.append(h)
                b_ub.append(-ONE)
            elif s > 0:
                A_ub.append(eg.scale(-1, h))
                b_ub.append(-ONE)
            else:
                A_eq.append(h)
        res = linprog([ZERO] * n, A_ub, b_ub, A_eq, [ZERO] * len(A_eq))
        return res.x if res.status == "optimal" else None

    def dfs(signs):
        if len(signs) == len(hs):
            v = witness(signs)
            if v is None:
                return
            home = [C for C in cones if C.contains(v)]
            if not home:
                return
            gens = []
            for C in home:
                act = [a for a in C.inequalities if dot(a, v) == 0]
                gens.extend(ConvexPolyCone.from_inequalities(act, n).generators)
            N = ConvexPolyCone.from_inequalities(gens, n)
            if N not in results:
                results.append(N)
            return
        for s in (-1, 0, 1):
            if witness(signs + [s]) is not None:
                dfs(signs + [s])

    dfs([])
    return eg.prune(results)


def _polyhedral_flat(flat):
    return all(p.polyhedral for p in flat.pieces)


def limiting_normal_cone(S, x):
    """Limiting normal cone; exact for convex sets and polyhedral unions."""
    x = vec(x)
    flat = sa.flatten(S)
    if is_convex(S):
        T = tangent_cone(S, x, flat)
        if len(T.pieces) == 1:
            N = T.pieces[0].polar()
            return ConeResult(ConeRep((N,), T.exact), T.exact, T.method, {"rule": "convex"})
    if _polyhedral_flat(flat):
        T = tangent_cone(S, x, flat)
        pieces = normal_cone_of_union(T.pieces)
        return ConeResult(ConeRep(tuple(pieces)), True, "face-enumeration", {"rule": "arrangement cells"})
    return oracle_normal(S, x)


def limiting_normal_of_cone(cone):
    """N(0; C) for a union of polyhedral cones."""
    rep = eg.as_rep(cone)
    if len(rep.pieces) == 1:
        return ConeRep((rep.pieces[0].polar(),), rep.exact)
    return ConeRep(tuple(normal_cone_of_union(rep.pieces)), rep.exact)


# ---------------------------------------------------------------- subdifferentials

FLAVORS = ("basic", "frechet", "upper", "singular")


@dataclass(frozen=True)
class SubdiffResult:
    flavor: str
    points: tuple  # vertices of the polytope; empty tuple means the empty set
    exact: bool = True

    @property
    def empty(self):
        return not self.points

    @property
    def singleton(self):
        return len(self.points) == 1

    def contains(self, v):
        v = vec(v)
        if not self.points:
            return False
        if len(self.points) == 1:
            return self.points[0] == v
        m = len(self.points)
        n = len(v)
        A_eq = [tuple(p[k] for p in self.points) for k in range(n)] + [(ONE,) * m]
        b_eq = list(v) + [ONE]
        return linprog([ZERO] * m, (), (), A_eq, b_eq, nonneg=range(m)).status == "optimal"


def polytope_vertices(A, b, n):
    """Vertices of the bounded polyhedron {v : A v <= b} by basis enumeration."""
    verts = []
    for S in itertools.combinations(range(len(A)), n):
        rows = [A[k] for k in S]
        if eg.rank(rows) < n:
            continue
        v = eg.solve(rows, [b[k] for k in S])
        if v is None:
            continue
        if all(dot(a, v) <= bi for a, bi in zip(A, b)) and v not in verts:
            verts.append(v)
    return tuple(sorted(verts))


def _full_dim_active(atom, x):
    out = []
    for p in atom.pieces:
        if not p.in_region(x):
            continue
        if p.A and eg.Polyhedron(p.A, p.b, atom.dim).interior_point() is None:
            continue
        out.append(p)
    return out


def subdifferential(atom, x, flavor="basic"):
    if flavor not in FLAVORS:
        raise UnsupportedFlavor(f"unknown flavor {flavor!r}")
    x = vec(x)
    n = atom.dim
    if flavor == "singular":
        # piecewise polynomial atoms are locally Lipschitz
        return SubdiffResult(flavor, ((ZERO,) * n,))
    act = _full_dim_active(atom, x)
    if not act:
        raise MalformedInput("atom has no full-dimensional piece at the point")
    grads = [sa.qgrad(p.quad, x) for p in act]
    if len(set(grads)) == 1:
        return SubdiffResult(flavor, (grads[0],))
    if flavor == "basic" and not atom.convex:
        raise UnsupportedFlavor("basic subdifferential at a nonconvex kink")
    sign = 1 if flavor in ("frechet", "basic") else -1
    A, b = [], []
    for p, g in zip(act, grads):
        T = eg.Polyhedron(p.A, p.b, n).tangent_cone(x)
        for h in T.generators:
            # frechet: (v - g).h <= 0 ; upper: (g - v).h <= 0
            A.append(eg.scale(sign, h))
            b.append(sign * dot(h, g))
    return SubdiffResult(flavor, polytope_vertices(A, b, n))


# ---------------------------------------------------------------- coderivatives

@dataclass(frozen=True)
class CoderivResult:
    pieces: tuple  # tuple of Polyhedron in x*-space
    exact: bool

    def contains(self, xs):
        return any(P.contains(xs) for P in self.pieces)

    def is_zero_only(self):
        """True iff the set is exactly {0}."""
        n = self.pieces[0].dim if self.pieces else 0
        for P in self.pieces:
            if P.is_empty():
                continue
            if not P.contains((ZERO,) * n):
                return False
            for k in range(n):
                for s in (1, -1):
                    c = [ZERO] * n
                    c[k] = Fraction(-s)
                    res = linprog(c, P.A, P.b)
                    if res.status == "unbounded" or (res.status == "optimal" and res.value != 0):
                        return False
        return True


def coderivative(G, point, ystar, n):
    """``{x* : (x*, -y*) in N(point; G)}`` for a graph ``G`` in R^n x R^m."""
    ystar = vec(ystar)
    N = limiting_normal_cone(G, point)
    polys = []
    for C in N.pieces:
        A, b = [], []
        for a in C.facets:
            ax, ay = a[:n], a[n:]
            A.append(ax)
            b.append(dot(ay, ystar))
        for e in C.eqs:
            ex, ey = e[:n], e[n:]
            A.append(ex)
            b.append(dot(ey, ystar))
            A.append(eg.scale(-1, ex))
            b.append(-dot(ey, ystar))
        P = eg.Polyhedron(tuple(A), tuple(b), n)
        if not P.is_empty():
            polys.append(P)
    return CoderivResult(tuple(polys), N.exact)


# ---------------------------------------------------------------- sampling oracles

T_GRID = tuple(Fraction(1, 2 ** k) for k in range(1, 15))


def _directions(n, count=None, seed=0):
    if n == 1:
        return [(1.0,), (-1.0,)], 90.0
    if n == 2:
        m = count or 720
        return [(math.cos(2 * math.pi * k / m), math.sin(2 * math.pi * k / m)) for k in range(m)], 360.0 / m
    rng = random.Random(seed)
    out = []
    for _ in range(count or 2000):
        v = [rng.gauss(0, 1) for _ in range(n)]
        s = math.sqrt(sum(t * t for t in v))
        out.append(tuple(t / s for t in v))
    return out, 1.0


def _rational(v, den=10 ** 6):
    return tuple(Fraction(t).limit_denominator(den) for t in v)


def _perturb(d, ang_deg, n):
    if n == 1:
        return [d]
    if n == 2:
        out = [d]
        for s in (1, -1):
            a = math.radians(s * ang_deg)
            out.append((d[0] * math.cos(a) - d[1] * math.sin(a), d[0] * math.sin(a) + d[1] * math.cos(a)))
        return out
    eps = math.sin(math.radians(ang_deg))
    out = [d]
    for k in range(n):
        for s in (1, -1):
            w = list(d)
            w[k] += s * eps
            nn = math.sqrt(sum(t * t for t in w))
            out.append(tuple(t / nn for t in w))
    return out


def _rays_rep(dirs, n):
    pieces = []
    for d in dirs:
        r = eg.primitive(_rational(d, 1000))
        if not eg.is_zero(r):
            C = ConvexPolyCone.from_generators([r], n)
            if C not in pieces:
                pieces.append(C)
    if not pieces:
        pieces = [ConvexPolyCone.zero(n)]
    return ConeRep(tuple(pieces), False)


def oracle_tangent(S, x, count=None, seed=0, levels=3):
    """Sampled tangent directions from difference quotients on a direction grid."""
    x = vec(x)
    flat = sa.flatten(S)
    n = flat.dim
    dirs, res = _directions(n, count, seed)
    tol = res / 2 if n == 2 else 1.0
    ts = T_GRID[-levels:]
    accepted = []
    for d in dirs:
        cands = [_rational(c) for c in _perturb(d, tol, n)]
        ok = True
        for t in ts:
            if not any(any(p.contains(tuple(xi + t * ci for xi, ci in zip(x, c))) for p in flat.pieces)
                       for c in cands):
                ok = False
                break
        if ok:
            accepted.append(d)
    meta = {"directions": len(dirs), "accepted": accepted, "all": dirs, "tolerance_deg": tol,
            "t_grid": [str(t) for t in ts]}
    return ConeResult(_rays_rep(accepted, n), False, "sampled", meta)


def _project_piece_float(p, y):
    if p.polyhedral:
        P = p.polyhedron()
        if P.is_empty():
            return None
        return tuple(float(v) for v in eg.project(P, _rational(y, 10 ** 9)))
    import numpy as np
    from scipy.optimize import minimize

    A, b = p.rows()
    yf = np.array(y, dtype=float)
    cons = []
    if A:
        Af = np.array([[float(v) for v in a] for a in A])
        bf = np.array([float(v) for v in b])
        cons.append({"type": "ineq", "fun": lambda z: bf - Af @ z, "jac": lambda z: -Af})
    for Q, qv, c in p.quads:
        Qf = np.array([[float(v) for v in r] for r in Q])
        qf = np.array([float(v) for v in qv])
        cons.append({"type": "ineq", "fun": (lambda z, Qf=Qf, qf=qf, c=float(c): -(z @ Qf @ z + qf @ z + c)),
                     "jac": (lambda z, Qf=Qf, qf=qf: -(2 * Qf @ z + qf))})
    r = minimize(lambda z: float((z - yf) @ (z - yf)), yf, jac=lambda z: 2 * (z - yf), constraints=cons,
                 method="SLSQP", options={"ftol": 1e-16, "maxiter": 1000})
    return tuple(r.x)


def oracle_normal(S, x, radii=(1e-1, 1e-2, 1e-3, 1e-4), count=72, seed=0):
    """Sampled normal directions ``(y - proj(y))/|y - proj(y)|`` for grid points ``y`` near ``x``."""
    x = vec(x)
    flat = sa.flatten(S)
    n = flat.dim
    dirs, _ = _directions(n, count if n == 2 else 400, seed)
    levels = []
    for r in radii:
        normals = []
        for d in dirs:
            y = tuple(float(xi) + r * di for xi, di in zip(x, d))
            best, bp = None, None
            for p in flat.pieces:
                pr = _project_piece_float(p, y)
                if pr is None:
                    continue
                dd = sum((a - b) ** 2 for a, b in zip(y, pr))
                if best is None or dd < best:
                    best, bp = dd, pr
            if best is None or best < (1e-9 * r) ** 2:
                continue
            v = tuple(a - b for a, b in zip(y, bp))
            s = math.sqrt(sum(t * t for t in v))
            normals.append(tuple(t / s for t in v))
        levels.append(normals)
    finest = levels[-1]
    meta = {"radii": list(radii), "normals": finest, "levels": levels}
    return ConeResult(_rays_rep(finest, n), False, "sampled", meta)


def angle_to_cone(d, cone):
    """Angle in degrees between a unit float direction and a convex cone (approximate)."""
    import numpy as np

    d = np.array(d, dtype=float)
    best = math.pi
    for C in eg.as_rep(cone).pieces:
        if C.contains(_rational(d, 10 ** 9)):
            return 0.0
        gens = [np.array([float(v) for v in g]) for g in C.generators]
        if not gens:
            continue
        G = np.array(gens).T
        from scipy.optimize import nnls

        coef_, _ = nnls(G, d)
        p = G @ coef_
        nn = np.linalg.norm(p)
        if nn < 1e-15:
            continue
        c = float(np.clip(p @ d / nn, -1, 1))
        best = min(best, math.acos(c))
    return math.degrees(best)
