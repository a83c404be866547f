"""Set expressions, function atoms and countable families.

Coefficients anywhere in an expression may be plain :class:`Fraction` values
or :class:`~conekit.templates.RatFunc` templates in the family index ``i``.
An :class:`IndexedFamily` holds one templated expression and substitutes the
index on demand; the same expression evaluated with the symbolic index is
what the limit-set machinery works on.
"""
from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import exactgeom as eg
from .exactgeom import MalformedInput, Polyhedron, dot, q, vec
from .templates import RatFunc, parse

ZERO = Fraction(0)
ONE = Fraction(1)


class Unsupported(Exception):
    """The requested exact computation is not available for this input."""


class IndexOutOfRange(IndexError):
    pass


def coef(x):
    """Coerce a literal or template to a coefficient (Fraction or RatFunc)."""
    if isinstance(x, RatFunc):
        return x.constant_value() if x.is_constant() else x
    if isinstance(x, str) and "i" in x:
        return coef(parse(x))
    return q(x)


def cvec(v):
    return tuple(coef(x) for x in v)


def cmat(M):
    return tuple(cvec(r) for r in M)


def _map(obj, fn):
    if isinstance(obj, (Fraction, RatFunc)):
        return fn(obj)
    if isinstance(obj, tuple):
        return tuple(_map(x, fn) for x in obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if isinstance(obj, IndexedFamily):
            return obj
        changes = {f.name: _map(getattr(obj, f.name), fn) for f in dataclasses.fields(obj) if f.init}
        return dataclasses.replace(obj, **changes)
    return obj


def _coeffs(obj):
    if isinstance(obj, (Fraction, RatFunc)):
        yield obj
    elif isinstance(obj, tuple):
        for x in obj:
            yield from _coeffs(x)
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type) and not isinstance(obj, IndexedFamily):
        for f in dataclasses.fields(obj):
            yield from _coeffs(getattr(obj, f.name))


def at_index(obj, i):
    i = Fraction(i)
    return _map(obj, lambda c: c(i) if isinstance(c, RatFunc) else c)


def is_templated(obj):
    return any(isinstance(c, RatFunc) for c in _coeffs(obj))


# ---------------------------------------------------------------- quadratic forms

def qform(Q, x):
    return sum((x[r] * sum((Q[r][s] * x[s] for s in range(len(x))), ZERO) for r in range(len(x))), ZERO)


def qeval(quad, x):
    Q, qv, c = quad
    return qform(Q, x) + dot(qv, x) + c


def qgrad(quad, x):
    Q, qv, _ = quad
    n = len(x)
    return tuple(2 * sum((Q[r][s] * x[s] for s in range(n)), ZERO) + qv[r] for r in range(n))


def zero_mat(n):
    return tuple((ZERO,) * n for _ in range(n))


def is_zero_mat(Q):
    return all(all(c == 0 for c in row) for row in Q)


def sym(Q):
    n = len(Q)
    return tuple(tuple((Q[r][s] + Q[s][r]) / 2 for s in range(n)) for r in range(n))


# ---------------------------------------------------------------- atoms

@dataclass(frozen=True)
class AtomPiece:
    """``x'Qx + q.x + c`` on the region ``{x : A x <= b}``."""

    A: tuple
    b: tuple
    Q: tuple
    qv: tuple
    c: Fraction

    @property
    def quad(self):
        return (self.Q, self.qv, self.c)

    def in_region(self, x):
        return all(dot(a, x) <= bi for a, bi in zip(self.A, self.b))


@dataclass(frozen=True)
class ConjugateSpec:
    """Closed form of a conjugate: ``conj(p + lam d) = alpha lam^2 + beta lam + gamma``
    for ``lam >= 0`` and ``+oo`` elsewhere."""

    p: tuple
    d: tuple
    alpha: Fraction = ZERO
    beta: Fraction = ZERO
    gamma: Fraction = ZERO

    def point(self, lam):
        lam = Fraction(lam)
        x = tuple(pi + lam * di for pi, di in zip(self.p, self.d))
        return x + (self.alpha * lam * lam + self.beta * lam + self.gamma,)


@dataclass(frozen=True)
class Atom:
    """A continuous piecewise quadratic function on R^n."""

    dim: int
    pieces: tuple
    convex: bool = True
    conj: ConjugateSpec | None = None
    name: str = ""

    @classmethod
    def affine(cls, a, c=0, name=""):
        a = cvec(a)
        c = coef(c)
        n = len(a)
        piece = AtomPiece((), (), zero_mat(n), a, c)
        return cls(n, (piece,), True, ConjugateSpec(a, (ZERO,) * n, ZERO, ZERO, -c), name)

    @classmethod
    def quadratic(cls, Q, qv, c=0, convex=True, conj=None, name=""):
        Q = cmat(Q)
        qv = cvec(qv)
        return cls(len(qv), (AtomPiece((), (), sym(Q), qv, coef(c)),), convex, conj, name)

    @classmethod
    def piecewise(cls, pieces, convex=True, conj=None, name=""):
        """``pieces``: iterable of (A, b, Q, q, c)."""
        out = []
        for A, b, Q, qv, c in pieces:
            out.append(AtomPiece(cmat(A), cvec(b), sym(cmat(Q)), cvec(qv), coef(c)))
        return cls(len(out[0].qv), tuple(out), convex, conj, name)

    @property
    def is_affine(self):
        return len(self.pieces) == 1 and is_zero_mat(self.pieces[0].Q)

    @property
    def lipschitz(self):
        # continuous piecewise polynomial atoms are locally Lipschitz everywhere
        return True

    def value(self, x):
        x = vec(x)
        for p in self.pieces:
            if p.in_region(x):
                return qeval(p.quad, x)
        raise MalformedInput("atom pieces do not cover the point")

    __call__ = value

    def active_pieces(self, x):
        x = vec(x)
        return [p for p in self.pieces if p.in_region(x)]

    def validate(self, seed=0, samples=100, box=4):
        """Sampled continuity and midpoint-convexity checks; returns a list of problems."""
        if is_templated(self):
            raise Unsupported("validate an instantiated atom")
        rng = random.Random(seed)
        n = self.dim
        problems = []

        def rnd():
            return tuple(Fraction(rng.randint(-box * 64, box * 64), 64) for _ in range(n))

        for k, p in enumerate(self.pieces):
            for a, bi in zip(p.A, p.b):
                nn = dot(a, a)
                if nn == 0:
                    continue
                for _ in range(samples):
                    x = rnd()
                    x = tuple(xj - (dot(a, x) - bi) / nn * aj for xj, aj in zip(x, a))
                    vals = {qeval(r.quad, x) for r in self.pieces if r.in_region(x)}
                    if len(vals) > 1:
                        problems.append(("discontinuous", k, x))
                        break
        if self.convex and not self.is_affine:
            for _ in range(samples):
                x, y = rnd(), rnd()
                m = tuple((a + b) / 2 for a, b in zip(x, y))
                if self.value(m) > (self.value(x) + self.value(y)) / 2:
                    problems.append(("nonconvex", x, y))
                    break
        return problems


# ---------------------------------------------------------------- set expressions

class SetExpr:
    """Base class for closed subsets of R^n."""

    def map_coeffs(self, fn):
        return _map(self, fn)

    def at(self, i):
        return at_index(self, i)

    def __and__(self, other):
        return Intersection((self, other))

    def __or__(self, other):
        return Union((self, other))


@dataclass(frozen=True)
class Polyhedral(SetExpr):
    """``{x : A x <= b}`` with possibly templated data."""

    A: tuple
    b: tuple
    dim: int

    @classmethod
    def make(cls, A, b, dim=None):
        A, b = cmat(A), cvec(b)
        if len(A) != len(b):
            raise MalformedInput("row count of A differs from length of b")
        if dim is None:
            if not A:
                raise MalformedInput("dimension required")
            dim = len(A[0])
        for r in A:
            if len(r) != dim:
                raise MalformedInput("inconsistent row length")
        return cls(A, b, dim)

    def polyhedron(self):
        return Polyhedron(self.A, self.b, self.dim)


def halfspace(a, b=0):
    return Polyhedral.make([a], [b])


def whole(n):
    return Polyhedral((), (), n)


@dataclass(frozen=True)
class LevelSet(SetExpr):
    """``{x : atom(x) <= 0}``."""

    atom: Atom

    @property
    def dim(self):
        return self.atom.dim


@dataclass(frozen=True)
class Epigraph(SetExpr):
    """``{(x, t) : atom(x) <= t}`` in R^(n+1)."""

    atom: Atom

    @property
    def dim(self):
        return self.atom.dim + 1


@dataclass(frozen=True)
class Complement(SetExpr):
    """Closure of the complement of ``int {x : A x <= b}``."""

    A: tuple
    b: tuple
    dim: int

    @classmethod
    def make(cls, A, b):
        A, b = cmat(A), cvec(b)
        return cls(A, b, len(A[0]))


@dataclass(frozen=True)
class Preimage(SetExpr):
    """``{x : M x + m in inner}``."""

    M: tuple
    m: tuple
    inner: SetExpr

    @classmethod
    def make(cls, M, m, inner):
        M, m = cmat(M), cvec(m)
        if len(M) != inner.dim or len(m) != inner.dim:
            raise MalformedInput("map output dimension differs from inner set")
        return cls(M, m, inner)

    @property
    def dim(self):
        return len(self.M[0])

    @property
    def surjective(self):
        if is_templated(self.M):
            raise Unsupported("surjectivity of a templated map")
        return eg.rank(self.M) == len(self.M)


@dataclass(frozen=True)
class Union(SetExpr):
    parts: tuple

    @property
    def dim(self):
        return self.parts[0].dim


@dataclass(frozen=True)
class Intersection(SetExpr):
    parts: tuple

    @property
    def dim(self):
        return self.parts[0].dim


@dataclass(frozen=True)
class Truncated(SetExpr):
    """Intersection of the members of ``family`` with index at most ``K``."""

    family: "IndexedFamily"
    K: int

    @property
    def dim(self):
        return self.family.dim


# ---------------------------------------------------------------- flattening

@dataclass(frozen=True)
class BasicPiece:
    """``{x : RA x <= Rb, A x <= b, quad_k(x) <= 0}``; the R-part is the region tag."""

    RA: tuple
    Rb: tuple
    A: tuple
    b: tuple
    quads: tuple
    dim: int

    def rows(self):
        return self.RA + self.A, self.Rb + self.b

    def contains(self, x):
        A, b = self.rows()
        if any(dot(a, x) > bi for a, bi in zip(A, b)):
            return False
        return all(qeval(qd, x) <= 0 for qd in self.quads)

    @property
    def polyhedral(self):
        return not self.quads

    def polyhedron(self):
        A, b = self.rows()
        return Polyhedron(A, b, self.dim)

    def merge(self, other, keep_region=True):
        if keep_region:
            return BasicPiece(self.RA, self.Rb, self.A + other.A, self.b + other.b, self.quads + other.quads, self.dim)
        A1, b1 = self.rows()
        A2, b2 = other.rows()
        return BasicPiece((), (), A1 + A2, b1 + b2, self.quads + other.quads, self.dim)


@dataclass(frozen=True)
class Flat:
    """Union of basic pieces; ``partition`` marks pieces that share a region tiling."""

    pieces: tuple
    partition: tuple | None
    dim: int


def _normalize_quad(Q, qv, c):
    if is_zero_mat(Q):
        return None
    return (Q, qv, c)


def _piece(RA, Rb, A, b, quads, dim):
    A2, b2, Q2 = list(A), list(b), []
    for Q, qv, c in quads:
        if is_zero_mat(Q):
            A2.append(qv)
            b2.append(-c)
        else:
            Q2.append((Q, qv, c))
    return BasicPiece(tuple(RA), tuple(Rb), tuple(A2), tuple(b2), tuple(Q2), dim)


class FlatSet(SetExpr):
    """Wraps a precomputed :class:`Flat` as a set expression."""

    def __init__(self, flat):
        self.flat = flat
        self.dim = flat.dim

    def __repr__(self):
        return f"FlatSet({len(self.flat.pieces)} pieces)"


def flatten(S):
    if isinstance(S, FlatSet):
        return S.flat
    if isinstance(S, Polyhedron):
        return Flat((_piece((), (), S.A, S.b, (), S.dim),), None, S.dim)
    if isinstance(S, Polyhedral):
        return Flat((_piece((), (), S.A, S.b, (), S.dim),), None, S.dim)
    if isinstance(S, LevelSet):
        at = S.atom
        pieces = tuple(_piece(p.A, p.b, (), (), (p.quad,), at.dim) for p in at.pieces)
        part = tuple((p.A, p.b) for p in at.pieces) if len(pieces) > 1 else None
        return Flat(pieces, part, at.dim)
    if isinstance(S, Epigraph):
        at = S.atom
        n = at.dim
        pieces = []
        for p in at.pieces:
            RA = tuple(tuple(a) + (ZERO,) for a in p.A)
            Q = tuple(tuple(row) + (ZERO,) for row in p.Q) + ((ZERO,) * (n + 1),)
            qv = tuple(p.qv) + (-ONE,)
            pieces.append(_piece(RA, p.b, (), (), ((Q, qv, p.c),), n + 1))
        part = tuple((pc.RA, pc.Rb) for pc in pieces) if len(pieces) > 1 else None
        return Flat(tuple(pieces), part, n + 1)
    if isinstance(S, Complement):
        if is_templated(S):
            raise Unsupported("complement of a templated polyhedron")
        P = Polyhedron(S.A, S.b, S.dim)
        if P.interior_point() is None:
            return Flat((_piece((), (), (), (), (), S.dim),), None, S.dim)
        pieces = tuple(_piece((), (), (tuple(-x for x in a),), (-bi,), (), S.dim) for a, bi in zip(S.A, S.b))
        return Flat(pieces, None, S.dim)
    if isinstance(S, Preimage):
        inner = flatten(S.inner)
        return Flat(tuple(_pull(p, S.M, S.m) for p in inner.pieces),
                    None if inner.partition is None else ("pre", S.M, S.m, inner.partition), S.dim)
    if isinstance(S, Union):
        pieces = []
        for part in S.parts:
            pieces.extend(flatten(part).pieces)
        return Flat(tuple(pieces), None, S.dim)
    if isinstance(S, Intersection):
        flats = [flatten(p) for p in S.parts]
        out = flats[0]
        for f in flats[1:]:
            out = _intersect_flat(out, f)
        return out
    if isinstance(S, Truncated):
        return flatten(Intersection(tuple(S.family.instantiate(i) for i in S.family.indices(S.K))))
    raise MalformedInput(f"unsupported set expression {type(S).__name__}")


def _pull(p, M, m):
    n = len(M[0])

    def pull_rows(A, b):
        A2 = tuple(tuple(sum((a[r] * M[r][s] for r in range(len(a))), ZERO) for s in range(n)) for a in A)
        b2 = tuple(bi - dot(a, m) for a, bi in zip(A, b))
        return A2, b2

    RA, Rb = pull_rows(p.RA, p.Rb)
    A, b = pull_rows(p.A, p.b)
    quads = []
    for Q, qv, c in p.quads:
        k = len(qv)
        QM = [[sum((Q[r][t] * M[t][s] for t in range(k)), ZERO) for s in range(n)] for r in range(k)]
        Q2 = tuple(tuple(sum((M[r][s1] * QM[r][s2] for r in range(k)), ZERO) for s2 in range(n)) for s1 in range(n))
        Qm = [sum((Q[r][t] * m[t] for t in range(k)), ZERO) for r in range(k)]
        lin = [2 * Qm[r] + qv[r] for r in range(k)]
        qv2 = tuple(sum((M[r][s] * lin[r] for r in range(k)), ZERO) for s in range(n))
        c2 = dot(m, Qm) + dot(qv, m) + c
        quads.append((Q2, qv2, c2))
    return _piece(RA, Rb, A, b, quads, n)


def _intersect_flat(f, g):
    if f.partition is not None and f.partition == g.partition:
        pieces = tuple(p.merge(r) for p, r in zip(f.pieces, g.pieces))
        return Flat(pieces, f.partition, f.dim)
    if len(g.pieces) == 1:
        return Flat(tuple(p.merge(g.pieces[0]) for p in f.pieces), f.partition, f.dim)
    if len(f.pieces) == 1:
        return Flat(tuple(r.merge(f.pieces[0]) for r in g.pieces), g.partition, f.dim)
    pieces = tuple(p.merge(r, keep_region=False) for p in f.pieces for r in g.pieces)
    return Flat(pieces, None, f.dim)


def dim_of(S):
    return S.dim


# ---------------------------------------------------------------- membership and distance

def member(S, x):
    x = vec(x)
    if len(x) != S.dim:
        raise MalformedInput("point dimension mismatch")
    if is_templated(S):
        raise Unsupported("membership in a templated set; instantiate it first")
    return any(p.contains(x) for p in flatten(S).pieces)


@dataclass(frozen=True)
class Distance:
    """Squared distance with an exactness flag."""

    sq: object
    exact: bool
    note: str = ""

    @property
    def value(self):
        return math.sqrt(float(self.sq))


def _piece_dist2_exact(p, x):
    P = p.polyhedron()
    if P.is_empty():
        return None
    return eg.dist2(P, x)


def _piece_dist2_approx(p, x):
    import numpy as np
    from scipy.optimize import minimize

    A, b = p.rows()
    xf = np.array([float(v) for v in x])
    cons = []
    if A:
        Af = np.array([[float(v) for v in a] for a in A])
        bf = np.array([float(v) for v in b])
        cons.append({"type": "ineq", "fun": lambda y: bf - Af @ y, "jac": lambda y: -Af})
    for Q, qv, c in p.quads:
        Qf = np.array([[float(v) for v in r] for r in Q])
        qf = np.array([float(v) for v in qv])
        cf = float(c)
        cons.append({"type": "ineq",
                     "fun": (lambda y, Qf=Qf, qf=qf, cf=cf: -(y @ Qf @ y + qf @ y + cf)),
                     "jac": (lambda y, Qf=Qf, qf=qf: -(2 * Qf @ y + qf))})
    best = None
    for start in (xf, np.zeros_like(xf)):
        res = minimize(lambda y: float((y - xf) @ (y - xf)), start, jac=lambda y: 2 * (y - xf),
                       constraints=cons, method="SLSQP", options={"ftol": 1e-14, "maxiter": 200})
        y = res.x
        viol = 0.0
        if A:
            viol = max(viol, float(np.max(Af @ y - bf)))
        for con in cons[1 if A else 0:]:
            viol = max(viol, -float(con["fun"](y)))
        if viol <= 1e-9 and (best is None or res.fun < best):
            best = float(res.fun)
        if best is not None:
            break
    return best


def distance(S, x):
    """Distance from ``x`` to ``S`` (squared), exact for polyhedral pieces."""
    x = vec(x)
    if is_templated(S):
        raise Unsupported("distance to a templated set")
    flat = flatten(S)
    if any(p.contains(x) for p in flat.pieces):
        return Distance(ZERO, True)
    if all(p.polyhedral for p in flat.pieces):
        vals = [d for d in (_piece_dist2_exact(p, x) for p in flat.pieces) if d is not None]
        if not vals:
            raise eg.InfeasibleSet("distance to an empty set")
        return Distance(min(vals), True)
    vals = []
    for p in flat.pieces:
        if p.polyhedral:
            d = _piece_dist2_exact(p, x)
            d = None if d is None else float(d)
        else:
            d = _piece_dist2_approx(p, x)
        if d is not None:
            vals.append(d)
    if not vals:
        raise eg.InfeasibleSet("distance to an empty set")
    return Distance(min(vals), False, "SLSQP, tolerance 1e-9")


# ---------------------------------------------------------------- families

@dataclass(frozen=True)
class TruncationPolicy:
    K_init: int = 8
    K_max: int = 512
    w: int = 5

    def __post_init__(self):
        if not (1 <= self.K_init <= self.K_max) or self.w < 1:
            raise MalformedInput("invalid truncation policy")


@dataclass(frozen=True)
class IndexedFamily:
    """``i -> template(i)`` for ``i >= start``, or an explicit finite list."""

    template: object = None
    members: tuple | None = None
    start: int = 1
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    name: str = ""

    @classmethod
    def finite(cls, members, start=1, name=""):
        return cls(None, tuple(members), start, TruncationPolicy(1, max(1, len(members)), 1), name)

    @classmethod
    def from_template(cls, template, start=1, policy=None, name=""):
        return cls(template, None, start, policy or TruncationPolicy(), name)

    @property
    def is_finite(self):
        return self.members is not None

    @property
    def dim(self):
        obj = self.members[0] if self.is_finite else self.template
        return obj.dim

    @property
    def last(self):
        if self.is_finite:
            return self.start + len(self.members) - 1
        return self.start + self.policy.K_max - 1

    def is_constant(self):
        if self.is_finite:
            return len(set(self.members)) == 1
        return not is_templated(self.template)

    def indices(self, K):
        """Indices of the first ``K`` members."""
        top = self.start + K - 1
        if self.is_finite:
            top = min(top, self.last)
        return range(self.start, top + 1)

    def instantiate(self, i):
        if not isinstance(i, int) or i < self.start or i > self.last:
            raise IndexOutOfRange(f"index {i} outside {self.start}..{self.last}")
        if self.is_finite:
            return self.members[i - self.start]
        return _instantiate(self.template, i)

    def symbolic(self):
        if self.is_finite:
            raise Unsupported("explicit finite family has no template")
        return self.template

    def map(self, fn, name=None):
        """Family of ``fn(member)``."""
        if self.is_finite:
            return IndexedFamily(None, tuple(fn(m) for m in self.members), self.start, self.policy, name or self.name)
        return IndexedFamily(fn(self.template), None, self.start, self.policy, name or self.name)

    def with_policy(self, policy):
        return dataclasses.replace(self, policy=policy)

    def truncated(self, K):
        return Truncated(self, K)

    def levels(self):
        """Level-set family of an atom family."""
        return self.map(LevelSet)


@lru_cache(maxsize=4096)
def _instantiate(template, i):
    return at_index(template, i)


# ---------------------------------------------------------------- limit sets

def _laurent_split(coeff_list):
    """Split a list of coefficients into {degree: list of Fraction}."""
    out = {}
    n = len(coeff_list)
    for k, cf in enumerate(coeff_list):
        if isinstance(cf, RatFunc):
            lau = cf.laurent()
            if lau is None:
                raise Unsupported("coefficient is not a Laurent polynomial in i")
        else:
            lau = {0: cf} if cf != 0 else {}
        for d, v in lau.items():
            out.setdefault(d, [ZERO] * n)[k] += v
    return out


def _constraint_limit(kind, data, n, start):
    """Replace a templated constraint by constraints equivalent for all i >= start."""
    if kind == "row":
        a, bi = data
        flat = list(a) + [-bi]
    else:
        Q, qv, c = data
        flat = [x for row in Q for x in row] + list(qv) + [c]
    parts = _laurent_split(flat)
    degs = sorted(parts)
    if not degs:
        return []

    def unflat(vals):
        if kind == "row":
            return ("row", (tuple(vals[:n]), -vals[n]))
        Q = tuple(tuple(vals[r * n:(r + 1) * n]) for r in range(n))
        return ("quad", (Q, tuple(vals[n * n:n * n + n]), vals[-1]))

    if len(degs) == 1:
        if degs[0] < 0 and start < 1:
            raise Unsupported("negative powers of i at index 0")
        return [unflat(parts[degs[0]])]
    if len(degs) == 2:
        d1, d2 = degs
        if d1 < 0 and start < 1:
            raise Unsupported("negative powers of i at index 0")
        s = start if d1 == 0 else max(start, 1)
        j0 = Fraction(s) ** (d2 - d1)
        low = [u + j0 * v for u, v in zip(parts[d1], parts[d2])]
        return [unflat(parts[d2]), unflat(low)]
    raise Unsupported("templated constraint with more than two powers of i")


def _limit_piece(p, start):
    n = p.dim
    if is_templated((p.RA, p.Rb)):
        raise Unsupported("region boundaries depend on i")
    rows, quads = [], []
    for a, bi in zip(p.A, p.b):
        for kind, data in _constraint_limit("row", (a, bi), n, start):
            rows.append(data)
    for qd in p.quads:
        for kind, data in _constraint_limit("quad", qd, n, start):
            if kind == "row":
                rows.append(data)
            else:
                quads.append(data)
    return _piece(p.RA, p.Rb, [r[0] for r in rows], [r[1] for r in rows], quads, n)


def limit_set(F):
    """Exact flattening of the full intersection of a family (all ``i >= start``)."""
    if F.is_finite:
        return flatten(Intersection(F.members))
    if not is_templated(F.template):
        return flatten(F.template)
    sym_flat = flatten(F.template)
    if len(sym_flat.pieces) > 1 and sym_flat.partition is None:
        raise Unsupported("templated union without a shared region tiling")
    pieces = tuple(_limit_piece(p, F.start) for p in sym_flat.pieces)
    return Flat(pieces, None if len(pieces) == 1 else ("limit",) + tuple((p.RA, p.Rb) for p in pieces), F.dim)


def limit_expr(F):
    return FlatSet(limit_set(F))


# ---------------------------------------------------------------- stagnation

@dataclass(frozen=True)
class ScanResult:
    value: object
    K_star: int
    stagnated: bool
    K_used: int


def stagnation_scan(F, quantity, equal=None, K_stop=None):
    """Evaluate ``quantity(K)`` for K = K_init, K_init+1, ... until it is constant
    over ``w`` consecutive truncations."""
    pol = F.policy
    top = pol.K_max if K_stop is None else min(pol.K_max, K_stop)
    if F.is_finite:
        top = min(top, len(F.members))
    if F.is_finite or F.is_constant():
        K = min(pol.K_init, top)
        return ScanResult(quantity(K), K, True, K)
    eq = equal or (lambda a, b: a == b)
    run_start, prev = pol.K_init, None
    K = pol.K_init
    while K <= top:
        val = quantity(K)
        if prev is not None and not eq(prev, val):
            run_start = K
        prev = val
        if K - run_start + 1 >= pol.w:
            return ScanResult(val, run_start, True, K)
        K += 1
    return ScanResult(prev, top, False, top)
