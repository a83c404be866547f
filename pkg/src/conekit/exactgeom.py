"""Exact polyhedral geometry over the rationals.

Everything here uses :class:`fractions.Fraction`. Cones are kept in a
canonical double-description form so that equality of cones is plain
equality of their representations.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .lp import linprog

ZERO = Fraction(0)


class MalformedInput(ValueError):
    """Inconsistent dimensions or unparsable numeric data."""


class InfeasibleSet(ValueError):
    """Raised when an operation needs a nonempty polyhedron."""


# ---------------------------------------------------------------- numbers

def q(x):
    """Coerce ``x`` (int, Fraction or ``"p/q"`` string) to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise MalformedInput(f"not a rational literal: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise MalformedInput(f"not a rational literal: {x!r}") from None
    if isinstance(x, float):
        # floats are accepted only when they are exactly representable short decimals
        return Fraction(repr(x))
    raise MalformedInput(f"not a rational literal: {x!r}")


def vec(v):
    return tuple(q(x) for x in v)


def fmt_q(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------- linear algebra

def dot(a, b):
    return sum((x * y for x, y in zip(a, b)), ZERO)


def norm2(a):
    return dot(a, a)


def add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def scale(s, a):
    return tuple(s * x for x in a)


def is_zero(a):
    return all(x == 0 for x in a)


def primitive(v):
    """Positive multiple of ``v`` that is a primitive integer vector."""
    v = vec(v)
    if is_zero(v):
        return v
    lcm = 1
    for x in v:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in v]
    g = 0
    for k in ints:
        g = math.gcd(g, k)
    return tuple(Fraction(k // g) for k in ints)


def rref(rows, ncols=None):
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    M = [list(vec(r)) for r in rows]
    if ncols is None:
        ncols = len(M[0]) if M else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((k for k in range(r, len(M)) if M[k][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for k in range(len(M)):
            if k != r and M[k][c] != 0:
                f = M[k][c]
                M[k] = [a - f * b for a, b in zip(M[k], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return [tuple(row) for row in M[:r]], pivots


def rank(rows):
    rows = list(rows)
    if not rows:
        return 0
    return len(rref(rows)[0])


def nullspace(rows, n):
    """Basis of {x : r.x = 0 for r in rows}."""
    R, piv = rref(rows, n) if rows else ([], [])
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        x = [ZERO] * n
        x[f] = Fraction(1)
        for row, p in zip(R, piv):
            x[p] = -row[f]
        basis.append(tuple(x))
    return basis


def solve(A, b):
    """One solution of ``A x = b`` or ``None`` (A given as rows)."""
    n = len(A[0]) if A else 0
    aug = [tuple(r) + (q(bi),) for r, bi in zip(A, b)]
    R, piv = rref(aug, n + 1)
    if n in piv:
        return None
    x = [ZERO] * n
    for row, p in zip(R, piv):
        x[p] = row[n]
    return tuple(x)


def project_onto_complement(v, basis):
    """Orthogonal projection of ``v`` onto the complement of span(basis)."""
    if not basis:
        return vec(v)
    # Gram system B B^T c = B v
    G = [[dot(a, b) for b in basis] for a in basis]
    rhs = [dot(a, v) for a in basis]
    c = solve(G, rhs)
    out = list(v)
    for ci, b in zip(c, basis):
        for k in range(len(out)):
            out[k] -= ci * b[k]
    return tuple(out)


# ---------------------------------------------------------------- double description

def _dd(ineqs, n):
    """Generators of {x : a.x <= 0 for a in ineqs}: (lineality basis, extreme rays)."""
    lin = [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    rays = []
    done = []
    for a in ineqs:
        if is_zero(a):
            continue
        k = next((idx for idx, l in enumerate(lin) if dot(a, l) != 0), None)
        if k is not None:
            l0 = lin.pop(k)
            al0 = dot(a, l0)
            if al0 > 0:
                l0, al0 = scale(-1, l0), -al0
            lin = [sub(l, scale(dot(a, l) / al0, l0)) for l in lin]
            rays = [sub(r, scale(dot(a, r) / al0, l0)) for r in rays]
            rays.append(primitive(l0))
            done.append(a)
            continue
        vals = [dot(a, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        keep = [r for r, v in zip(rays, vals) if v <= 0]
        if pos and neg:
            d = n - len(lin)
            tight = [frozenset(j for j, b in enumerate(done) if dot(b, r) == 0) for r in rays]
            for p in pos:
                for m in neg:
                    common = tight[p] & tight[m]
                    if rank([done[j] for j in common]) != d - 2:
                        continue
                    if any(o != p and o != m and common <= tight[o] for o in range(len(rays))):
                        continue
                    new = sub(scale(vals[p], rays[m]), scale(vals[m], rays[p]))
                    keep.append(primitive(new))
        seen = set()
        rays = []
        for r in keep:
            r = primitive(r)
            if r not in seen and not is_zero(r):
                seen.add(r)
                rays.append(r)
        done.append(a)
    return lin, rays


def _canon_lin(lin):
    if not lin:
        return ()
    R, _ = rref(lin)
    return tuple(sorted(primitive(r) for r in R))


def _canon_rays(rays, lin):
    out = set()
    for r in rays:
        p = primitive(project_onto_complement(r, list(lin)))
        if not is_zero(p):
            out.add(p)
    return tuple(sorted(out))


# ---------------------------------------------------------------- cones

@dataclass(frozen=True)
class ConvexPolyCone:
    """Closed convex polyhedral cone in both representations.

    ``rays`` and ``lineality`` generate the cone; ``facets`` and ``eqs`` give
    ``{x : a.x <= 0 (a in facets), e.x = 0 (e in eqs)}``.
    """

    dim: int
    rays: tuple
    lineality: tuple
    facets: tuple
    eqs: tuple
    exact: bool = True

    @property
    def synced(self):
        return True

    @classmethod
    def _build(cls, dim, lin, rays):
        lin = _canon_lin(lin)
        rays = _canon_rays(rays, lin)
        gens = list(rays) + list(lin) + [scale(-1, l) for l in lin]
        plin, prays = _dd(gens, dim)
        eqs = _canon_lin(plin)
        facets = _canon_rays(prays, eqs)
        return cls(dim, rays, lin, facets, eqs)

    @classmethod
    def from_generators(cls, gens, dim):
        gens = [vec(g) for g in gens]
        _check_dims(gens, dim)
        # polar first, then back: yields extreme rays and lineality
        plin, prays = _dd(gens, dim)
        ineqs = list(prays) + list(plin) + [scale(-1, l) for l in plin]
        lin, rays = _dd(ineqs, dim)
        return cls._build(dim, lin, rays)

    @classmethod
    def from_inequalities(cls, ineqs, dim):
        ineqs = [vec(a) for a in ineqs]
        _check_dims(ineqs, dim)
        lin, rays = _dd(ineqs, dim)
        return cls._build(dim, lin, rays)

    @classmethod
    def zero(cls, dim):
        return cls.from_generators([], dim)

    @classmethod
    def whole(cls, dim):
        return cls.from_inequalities([], dim)

    @cached_property
    def generators(self):
        return self.rays + self.lineality + tuple(scale(-1, l) for l in self.lineality)

    @cached_property
    def inequalities(self):
        return self.facets + self.eqs + tuple(scale(-1, e) for e in self.eqs)

    def contains(self, v):
        v = vec(v)
        return all(dot(a, v) <= 0 for a in self.facets) and all(dot(e, v) == 0 for e in self.eqs)

    __contains__ = contains

    def is_zero(self):
        return not self.rays and not self.lineality

    def is_whole(self):
        return not self.facets and not self.eqs

    @property
    def cone_dim(self):
        return self.dim - len(self.eqs)

    def polar(self):
        return ConvexPolyCone(self.dim, self.facets, self.eqs, self.rays, self.lineality, self.exact)

    def __str__(self):
        return to_text(self)


def _check_dims(vs, dim):
    if dim < 1:
        raise MalformedInput("dimension must be positive")
    for v in vs:
        if len(v) != dim:
            raise MalformedInput(f"vector of length {len(v)} in dimension {dim}")


@dataclass(frozen=True)
class ConeRep:
    """Finite union of closed convex polyhedral cones."""

    pieces: tuple
    exact: bool = True
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.pieces:
            raise MalformedInput("a cone union needs at least one piece")
        dims = {p.dim for p in self.pieces}
        if len(dims) != 1:
            raise MalformedInput("pieces of different dimensions")

    @classmethod
    def of(cls, *pieces, exact=True):
        return cls(tuple(pieces), exact)

    @property
    def dim(self):
        return self.pieces[0].dim

    def is_convex_single(self):
        return len(self.pieces) == 1

    def contains(self, v):
        return any(p.contains(v) for p in self.pieces)

    __contains__ = contains

    def generators(self):
        out = []
        for p in self.pieces:
            for g in p.generators:
                if g not in out:
                    out.append(g)
        return out


def as_rep(c):
    if isinstance(c, ConeRep):
        return c
    if isinstance(c, ConvexPolyCone):
        return ConeRep((c,), c.exact)
    raise MalformedInput(f"not a cone: {c!r}")


def dd_convert(dim, generators=None, inequalities=None):
    """Build a synced cone from whichever representation is supplied."""
    if generators is None and inequalities is None:
        raise MalformedInput("no representation supplied")
    if generators is not None:
        cone = ConvexPolyCone.from_generators(generators, dim)
        if inequalities is not None and cone != ConvexPolyCone.from_inequalities(inequalities, dim):
            raise MalformedInput("generator and inequality descriptions disagree")
        return cone
    return ConvexPolyCone.from_inequalities(inequalities, dim)


def polar(cone):
    """Polar of a cone or of a union of cones (intersection of piece polars)."""
    rep = as_rep(cone)
    if len(rep.pieces) == 1:
        return rep.pieces[0].polar()
    return ConvexPolyCone.from_inequalities(rep.generators(), rep.dim)


def conic_sum(cones, dim=None):
    cones = list(cones)
    if not cones:
        if dim is None:
            raise MalformedInput("dimension needed for an empty sum")
        return ConvexPolyCone.zero(dim)
    gens = []
    for c in cones:
        gens.extend(c.generators)
    return ConvexPolyCone.from_generators(gens, cones[0].dim)


def intersect(*cones):
    cones = [c for c in cones]
    ineqs = []
    for c in cones:
        ineqs.extend(c.inequalities)
    return ConvexPolyCone.from_inequalities(ineqs, cones[0].dim)


def intersect_reps(a, b):
    """Intersection of two unions, piecewise."""
    a, b = as_rep(a), as_rep(b)
    pieces = []
    for x in a.pieces:
        for y in b.pieces:
            pieces.append(intersect(x, y))
    return ConeRep(tuple(prune(pieces)), a.exact and b.exact)


def cone_member(cone, v):
    return as_rep(cone).contains(v)


def is_pointed(cone):
    return not cone.lineality


def point_outside(c, others):
    """A point of the convex cone ``c`` outside the union ``others``, or ``None``.

    Generators are tried first so that witnesses are short integer vectors.
    """
    for g in c.generators:
        if not any(o.contains(g) for o in others):
            return g
    choices = []
    for o in others:
        if o.is_whole():
            return None
        choices.append(list(o.facets) + list(o.eqs) + [scale(-1, e) for e in o.eqs])
    if not choices:
        return None if c.is_zero() else c.generators[0]
    base = list(c.inequalities)
    dim = c.dim

    def solve_for(strict):
        # c and a.x >= 1 for each chosen a
        A = base + [scale(-1, a) for a in strict]
        b = [ZERO] * len(base) + [Fraction(-1)] * len(strict)
        res = linprog([ZERO] * dim, A, b)
        return res.x if res.status == "optimal" else None

    def dfs(k, chosen):
        if k == len(choices):
            return solve_for(chosen)
        for a in choices[k]:
            if solve_for(chosen + [a]) is not None:
                found = dfs(k + 1, chosen + [a])
                if found is not None:
                    return found
        return None

    found = dfs(0, [])
    return None if found is None else primitive(found)


def _piece_in_union(c, others):
    return point_outside(c, others) is None


def cone_subset(a, b):
    a, b = as_rep(a), as_rep(b)
    return all(_piece_in_union(p, b.pieces) for p in a.pieces)


def witness_not_subset(a, b):
    """A vector of ``a`` outside ``b`` (both unions), or ``None`` if ``a`` is inside ``b``."""
    a, b = as_rep(a), as_rep(b)
    for p in a.pieces:
        w = point_outside(p, b.pieces)
        if w is not None:
            return w
    return None


def cone_equal(a, b):
    """Set equality of two unions of cones (exact)."""
    a, b = as_rep(a), as_rep(b)
    if len(a.pieces) == 1 and len(b.pieces) == 1:
        return a.pieces[0] == b.pieces[0]
    return cone_subset(a, b) and cone_subset(b, a)


def prune(pieces):
    """Drop pieces contained in another piece; keeps first occurrence order."""
    out = []
    for p in pieces:
        if p not in out:
            out.append(p)
    keep = []
    for i, p in enumerate(out):
        dominated = False
        for j, r in enumerate(out):
            if i != j and all(r.contains(g) for g in p.generators):
                if not all(p.contains(g) for g in r.generators) or j < i:
                    dominated = True
                    break
        if not dominated:
            keep.append(p)
    return keep


def union(pieces, exact=True):
    pieces = prune(list(pieces))
    return ConeRep(tuple(pieces), exact)


def ray(*coords):
    return ConvexPolyCone.from_generators([coords], len(coords))


# ---------------------------------------------------------------- polyhedra

@dataclass(frozen=True)
class Polyhedron:
    """The set ``{x : A x <= b}``."""

    A: tuple
    b: tuple
    dim: int

    @classmethod
    def make(cls, A, b, dim=None):
        A = tuple(vec(r) for r in A)
        b = vec(b)
        if len(A) != len(b):
            raise MalformedInput("row count of A differs from length of b")
        if dim is None:
            if not A:
                raise MalformedInput("dimension required for an unconstrained polyhedron")
            dim = len(A[0])
        _check_dims(A, dim)
        return cls(A, b, dim)

    @classmethod
    def whole(cls, dim):
        return cls((), (), dim)

    def contains(self, x):
        x = vec(x)
        return all(dot(a, x) <= bi for a, bi in zip(self.A, self.b))

    __contains__ = contains

    def feasible_point(self):
        if not self.A:
            return (ZERO,) * self.dim
        res = linprog([ZERO] * self.dim, self.A, self.b)
        return res.x if res.status == "optimal" else None

    def is_empty(self):
        return self.feasible_point() is None

    def interior_point(self):
        """A point with all inequalities strict, or ``None``."""
        if not self.A:
            return (ZERO,) * self.dim
        # maximise s subject to a.x + s <= b, s <= 1
        A = [tuple(a) + (Fraction(1),) for a in self.A] + [(ZERO,) * self.dim + (Fraction(1),)]
        b = list(self.b) + [Fraction(1)]
        res = linprog([ZERO] * self.dim + [Fraction(-1)], A, b)
        if res.status != "optimal" or res.x[-1] <= 0:
            return None
        return res.x[:-1]

    def active(self, x):
        x = vec(x)
        return [k for k, (a, bi) in enumerate(zip(self.A, self.b)) if dot(a, x) == bi]

    def irredundant(self):
        """Same set with redundant rows removed (exact LP per row)."""
        rows = list(zip(self.A, self.b))
        keep = []
        for k, (a, bi) in enumerate(rows):
            if is_zero(a):
                if bi < 0:
                    return self
                continue
            others = keep + [r for j, r in enumerate(rows) if j > k]
            if not others:
                keep.append((a, bi))
                continue
            res = linprog([-x for x in a], [r[0] for r in others], [r[1] for r in others])
            if res.status == "unbounded" or (res.status == "optimal" and -res.value > bi):
                keep.append((a, bi))
            elif res.status == "infeasible":
                keep.append((a, bi))
        return Polyhedron(tuple(r[0] for r in keep), tuple(r[1] for r in keep), self.dim)

    def tangent_cone(self, x):
        act = self.active(x)
        return ConvexPolyCone.from_inequalities([self.A[k] for k in act], self.dim)


PROJECTION_CAP = 20


def project(P, x):
    """Exact Euclidean projection of ``x`` onto the nonempty polyhedron ``P``."""
    x = vec(x)
    if len(x) != P.dim:
        raise MalformedInput("point dimension mismatch")
    if P.contains(x):
        return x
    if P.is_empty():
        raise InfeasibleSet("projection onto an empty polyhedron")
    if len(P.A) > PROJECTION_CAP:
        P = P.irredundant()
        if len(P.A) > PROJECTION_CAP:
            raise MalformedInput(f"projection limited to {PROJECTION_CAP} constraints")
    m = len(P.A)
    # only rows violated or tight at the answer matter; enumerate active sets by size
    for size in range(1, min(m, P.dim) + 1):
        for S in itertools.combinations(range(m), size):
            rows = [P.A[k] for k in S]
            if rank(rows) < size:
                continue
            G = [[dot(a, b) for b in rows] for a in rows]
            rhs = [dot(a, x) - P.b[k] for a, k in zip(rows, S)]
            lam = solve(G, rhs)
            if lam is None or any(l < 0 for l in lam):
                continue
            y = list(x)
            for l, a in zip(lam, rows):
                for j in range(P.dim):
                    y[j] -= l * a[j]
            y = tuple(y)
            if P.contains(y):
                return y
    raise AssertionError("projection face enumeration found no KKT point")


def dist2(P, x):
    x = vec(x)
    return norm2(sub(x, project(P, x)))


# ---------------------------------------------------------------- serialization

def _fmt_vecs(vs):
    return "[" + ", ".join("[" + ", ".join(fmt_q(c) for c in v) + "]" for v in vs) + "]"


def to_text(cone):
    return f"cone {{ rays: {_fmt_vecs(cone.generators)}, ineqs: {_fmt_vecs(cone.inequalities)} }}"


_TEXT_RE = re.compile(r"^\s*cone\s*\{\s*rays:\s*(\[.*\])\s*,\s*ineqs:\s*(\[.*\])\s*\}\s*$", re.S)


def _parse_vecs(s):
    s = s.strip()
    inner = s[1:-1].strip()
    if not inner:
        return []
    out = []
    for m in re.finditer(r"\[([^\[\]]*)\]", inner):
        out.append(tuple(q(t) for t in m.group(1).split(",") if t.strip()))
    return out


def from_text(text, dim=None):
    m = _TEXT_RE.match(text)
    if not m:
        raise MalformedInput("not a cone literal")
    gens, ineqs = _parse_vecs(m.group(1)), _parse_vecs(m.group(2))
    if dim is None:
        src = gens or ineqs
        if not src:
            raise MalformedInput("dimension cannot be inferred")
        dim = len(src[0])
    if gens:
        return dd_convert(dim, generators=gens, inequalities=ineqs or None)
    return dd_convert(dim, inequalities=ineqs)


def cone_to_json(cone):
    return {
        "rays": [[fmt_q(c) for c in v] for v in cone.generators],
        "ineqs": [[fmt_q(c) for c in v] for v in cone.inequalities],
    }
