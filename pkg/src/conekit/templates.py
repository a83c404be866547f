"""Rational functions of the family index ``i``.

Index templates are written as strings over the single variable ``i`` with
the operators ``+ - * / ^`` and parentheses, e.g. ``"1/i"`` or ``"i^2 - 3"``.
They parse into :class:`RatFunc` objects which can be evaluated exactly at an
integer index, compared symbolically, and asked for their behaviour as
``i -> oo``.
"""
from __future__ import annotations

import ast
import math
from fractions import Fraction


class TemplateError(ValueError):
    """Raised for template strings outside the supported grammar."""


def _trim(coeffs):
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class Poly:
    """Dense univariate polynomial with rational coefficients (low to high)."""

    __slots__ = ("c",)

    def __init__(self, coeffs=()):
        self.c = _trim(Fraction(x) for x in coeffs)

    @property
    def degree(self):
        return len(self.c) - 1  # -1 for the zero polynomial

    @property
    def lead(self):
        return self.c[-1] if self.c else Fraction(0)

    def is_zero(self):
        return not self.c

    def __call__(self, x):
        acc = Fraction(0)
        for a in reversed(self.c):
            acc = acc * x + a
        return acc

    def __add__(self, other):
        n = max(len(self.c), len(other.c))
        a = self.c + (Fraction(0),) * (n - len(self.c))
        b = other.c + (Fraction(0),) * (n - len(other.c))
        return Poly(x + y for x, y in zip(a, b))

    def __neg__(self):
        return Poly(-x for x in self.c)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not self.c or not other.c:
            return Poly()
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a == 0:
                continue
            for j, b in enumerate(other.c):
                out[i + j] += a * b
        return Poly(out)

    def scale(self, s):
        return Poly(x * s for x in self.c)

    def divmod(self, other):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        q = [Fraction(0)] * max(len(rem) - len(other.c) + 1, 1)
        d = other.degree
        while len(rem) - 1 >= d and rem:
            shift = len(rem) - 1 - d
            f = rem[-1] / other.lead
            q[shift] = f
            for k, b in enumerate(other.c):
                rem[k + shift] -= f * b
            rem = list(_trim(rem))
        return Poly(q), Poly(rem)

    def monic(self):
        return self.scale(1 / self.lead) if self.c else self

    def __eq__(self, other):
        return isinstance(other, Poly) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        return f"Poly({[str(x) for x in self.c]})"


def _gcd(a, b):
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return a.monic() if not a.is_zero() else a


class RatFunc:
    """Reduced quotient ``num(i) / den(i)`` with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, Poly) else Poly([num])
        den = Poly([1]) if den is None else den
        if den.is_zero():
            raise ZeroDivisionError("zero denominator in template")
        if num.is_zero():
            self.num, self.den = Poly(), Poly([1])
            return
        g = _gcd(num, den)
        if g.degree > 0:
            num = num.divmod(g)[0]
            den = den.divmod(g)[0]
        lc = den.lead
        self.num, self.den = num.scale(1 / lc), den.scale(1 / lc)

    @classmethod
    def const(cls, x):
        return cls(Poly([Fraction(x)]))

    @classmethod
    def index(cls):
        return cls(Poly([0, 1]))

    @staticmethod
    def lift(x):
        return x if isinstance(x, RatFunc) else RatFunc.const(x)

    def is_constant(self):
        return self.num.degree <= 0 and self.den.degree == 0

    def constant_value(self):
        if not self.is_constant():
            raise TemplateError("template depends on i")
        return self.num(0) / self.den(0)

    def is_zero(self):
        return self.num.is_zero()

    def __call__(self, i):
        d = self.den(Fraction(i))
        if d == 0:
            raise ZeroDivisionError(f"template undefined at i={i}")
        return self.num(Fraction(i)) / d

    evaluate = __call__

    @property
    def degree(self):
        """Growth order as i -> oo (``None`` for the zero function)."""
        if self.num.is_zero():
            return None
        return self.num.degree - self.den.degree

    @property
    def lead(self):
        return self.num.lead / self.den.lead

    def laurent(self):
        """Coefficients ``{power: coef}`` if this is a Laurent polynomial in i."""
        if self.num.is_zero():
            return {}
        nz = [k for k, a in enumerate(self.den.c) if a != 0]
        if len(nz) != 1:
            return None
        m = nz[0]
        return {k - m: a / self.den.c[m] for k, a in enumerate(self.num.c) if a != 0}

    def __add__(self, other):
        other = RatFunc.lift(other)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __sub__(self, other):
        return self + (-RatFunc.lift(other))

    def __rsub__(self, other):
        return RatFunc.lift(other) - self

    def __mul__(self, other):
        other = RatFunc.lift(other)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RatFunc.lift(other)
        if other.is_zero():
            raise ZeroDivisionError("template division by zero")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return RatFunc.lift(other) / self

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TemplateError("only integer exponents are supported")
        if k < 0:
            return RatFunc.const(1) / (self ** (-k))
        out = RatFunc.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RatFunc.const(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RatFunc({self.num!r}, {self.den!r})"

    def __str__(self):
        def fmt(p):
            terms = []
            for k, a in enumerate(p.c):
                if a == 0:
                    continue
                mon = "" if k == 0 else ("i" if k == 1 else f"i^{k}")
                terms.append(f"{a}" if not mon else (mon if a == 1 else f"{a}*{mon}"))
            return " + ".join(terms) or "0"

        if self.den.degree == 0:
            return fmt(self.num)
        return f"({fmt(self.num)})/({fmt(self.den)})"


_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
}


def _walk(node, src):
    if isinstance(node, ast.Expression):
        return _walk(node.body, src)
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return RatFunc.const(node.value)
    if isinstance(node, ast.Name):
        if node.id != "i":
            raise TemplateError(f"unknown symbol {node.id!r} at column {node.col_offset} in {src!r}")
        return RatFunc.index()
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _walk(node.operand, src)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exp = _walk(node.right, src)
            if not exp.is_constant() or exp.constant_value().denominator != 1:
                raise TemplateError(f"non-integer exponent at column {node.col_offset} in {src!r}")
            return _walk(node.left, src) ** int(exp.constant_value())
        op = _BINOPS.get(type(node.op))
        if op is not None:
            return op(_walk(node.left, src), _walk(node.right, src))
    raise TemplateError(f"unsupported syntax at column {getattr(node, 'col_offset', 0)} in {src!r}")


def parse(expr):
    """Parse a template (string, int or Fraction) into a :class:`RatFunc`."""
    if isinstance(expr, RatFunc):
        return expr
    if isinstance(expr, (int, Fraction)):
        return RatFunc.const(expr)
    if not isinstance(expr, str):
        raise TemplateError(f"cannot parse template {expr!r}")
    try:
        tree = ast.parse(expr.strip().replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise TemplateError(f"syntax error at column {exc.offset} in {expr!r}") from None
    return _walk(tree, expr)


def depends_on_index(expr):
    return not parse(expr).is_constant()


def limit_direction(vec):
    """Exact limit of ``v(i)/|v(i)|`` up to positive scaling, as i -> oo.

    Returns the vector of leading coefficients of the fastest-growing
    components, or ``None`` when every component vanishes identically.
    """
    vec = [RatFunc.lift(v) for v in vec]
    degs = [v.degree for v in vec]
    live = [d for d in degs if d is not None]
    if not live:
        return None
    top = max(live)
    return tuple(v.lead if d == top else Fraction(0) for v, d in zip(vec, degs))


def _root_bound(p):
    if p.degree <= 0:
        return 0
    lead = abs(p.lead)
    return 1 + max(abs(a) / lead for a in p.c[:-1])


def negative_for_all(rf, start=1, max_scan=100000):
    """True iff ``rf(i) < 0`` for every integer ``i >= start``.

    Beyond the Cauchy root bound of numerator and denominator the sign is that
    of the leading coefficient ratio; below it every index is checked exactly.
    """
    rf = RatFunc.lift(rf)
    if rf.is_zero():
        return False
    bound = max(_root_bound(rf.num), _root_bound(rf.den))
    last = max(start, math.ceil(bound) + 1)
    if last - start > max_scan:
        return False
    for i in range(start, last + 1):
        if rf.den(i) == 0 or rf(i) >= 0:
            return False
    return rf.lead < 0
