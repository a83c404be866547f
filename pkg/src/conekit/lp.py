"""Exact rational linear programming.

A dense two-phase simplex over :class:`fractions.Fraction`. Problem sizes in
this package are small (tens to a few hundred rows).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple | None = None
    value: Fraction | None = None

    @property
    def feasible(self):
        return self.status != "infeasible"


def _pivot(T, basis, r, c):
    piv = T[r][c]
    row = T[r]
    if piv != 1:
        inv = 1 / piv
        row = [v * inv for v in row]
        T[r] = row
    for k, other in enumerate(T):
        if k == r:
            continue
        f = other[c]
        if f != 0:
            T[k] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


DEGENERATE_LIMIT = 50


def _simplex(T, basis, ncols, allowed):
    """Minimise the objective stored in the last row of ``T`` (reduced costs).

    Dantzig's rule, falling back to Bland's rule after a run of degenerate
    pivots so that cycling cannot occur.
    """
    m = len(T) - 1
    stall = 0
    while True:
        obj = T[m]
        enter = -1
        if stall < DEGENERATE_LIMIT:
            most = ZERO
            for j in range(ncols):
                if allowed[j] and obj[j] < most:
                    most, enter = obj[j], j
        else:
            for j in range(ncols):
                if allowed[j] and obj[j] < 0:
                    enter = j
                    break
        if enter < 0:
            return "optimal"
        best = None
        leave = -1
        for r in range(m):
            a = T[r][enter]
            if a > 0:
                ratio = T[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave < 0:
            return "unbounded"
        stall = stall + 1 if best == 0 else 0
        _pivot(T, basis, leave, enter)


def linprog(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), nonneg=None):
    """Minimise ``c.x`` subject to ``A_ub x <= b_ub`` and ``A_eq x = b_eq``.

    ``nonneg`` is an optional iterable of variable indices constrained to be
    nonnegative; all other variables are free.
    """
    n = len(c)
    nonneg = set(nonneg or ())
    # column layout: for each original var one column (+ one for its negative part if free)
    cols = []
    for j in range(n):
        cols.append((j, 1))
        if j not in nonneg:
            cols.append((j, -1))
    nv = len(cols)

    def expand(row):
        row = [Fraction(v) for v in row]
        if len(row) != n:
            raise ValueError("constraint width does not match objective")
        return [row[j] * s for j, s in cols]

    rows, rhs, slack = [], [], []
    for a, b in zip(A_ub, b_ub):
        rows.append(expand(a))
        rhs.append(Fraction(b))
        slack.append(True)
    for a, b in zip(A_eq, b_eq):
        rows.append(expand(a))
        rhs.append(Fraction(b))
        slack.append(False)
    m = len(rows)
    ns = sum(slack)
    # rows whose slack can start in the basis need no artificial variable
    need = [not (slack[r] and rhs[r] >= 0) for r in range(m)]
    art = {}
    for r in range(m):
        if need[r]:
            art[r] = nv + ns + len(art)
    width = nv + ns + len(art)
    T = []
    basis = []
    si = 0
    for r in range(m):
        row = rows[r] + [ZERO] * (ns + len(art))
        own = None
        if slack[r]:
            row[nv + si] = ONE
            own = nv + si
            si += 1
        b = rhs[r]
        if b < 0:
            row = [-v for v in row]
            b = -b
        if need[r]:
            row[art[r]] = ONE
            own = art[r]
        basis.append(own)
        T.append(row + [b])

    # phase 1: minimise the sum of artificials
    obj = [ZERO] * (width + 1)
    for r in art:
        for j in range(nv + ns):
            obj[j] -= T[r][j]
        obj[-1] -= T[r][-1]
    T.append(obj)
    allowed = [True] * width
    if art:
        _simplex(T, basis, width, allowed)
        if T[m][-1] != 0:
            return LPResult("infeasible")
        # drive artificials out of the basis where possible
        for r in range(m):
            if basis[r] >= nv + ns:
                for j in range(nv + ns):
                    if T[r][j] != 0:
                        _pivot(T, basis, r, j)
                        break
        for j in range(nv + ns, width):
            allowed[j] = False

    # phase 2
    cexp = [Fraction(c[j]) * s for j, s in cols] + [ZERO] * (ns + len(art))
    obj = cexp + [ZERO]
    for r in range(m):
        f = cexp[basis[r]]
        if f != 0:
            obj = [a - f * b for a, b in zip(obj, T[r])]
    T[m] = obj
    status = _simplex(T, basis, width, allowed)
    if status == "unbounded":
        return LPResult("unbounded")
    vals = [ZERO] * width
    for r in range(m):
        vals[basis[r]] = T[r][-1]
    x = [ZERO] * n
    for k, (j, s) in enumerate(cols):
        x[j] += s * vals[k]
    value = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), ZERO)
    return LPResult("optimal", tuple(x), value)


def feasible_point(A_ub=(), b_ub=(), A_eq=(), b_eq=(), n=None, nonneg=None):
    """A point of the polyhedron, or ``None`` when it is empty."""
    if n is None:
        src = list(A_ub) or list(A_eq)
        if not src:
            raise ValueError("dimension required for an unconstrained system")
        n = len(src[0])
    res = linprog([0] * n, A_ub, b_ub, A_eq, b_eq, nonneg=nonneg)
    return res.x if res.status == "optimal" else None
