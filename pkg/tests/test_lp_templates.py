from fractions import Fraction as F

import pytest
import scipy.optimize as so
from hypothesis import given, settings
from hypothesis import strategies as st

from conekit import templates as tp
from conekit.lp import feasible_point, linprog


# ---------------------------------------------------------------- exact LP against HiGHS

def test_small_lp():
    # min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (8/5, 6/5)
    res = linprog([-1, -1], [[1, 2], [3, 1]], [4, 6], nonneg=[0, 1])
    assert res.status == "optimal"
    assert res.x == (F(8, 5), F(6, 5)) and res.value == F(-14, 5)


def test_infeasible_and_unbounded():
    assert linprog([0], [[1], [-1]], [-1, -1]).status == "infeasible"
    assert linprog([-1], [[-1]], [0]).status == "unbounded"


def test_equalities_with_free_variables():
    res = linprog([1, 1], A_eq=[[1, -1]], b_eq=[3], A_ub=[[-1, 0], [0, -1]], b_ub=[2, 2])
    assert res.status == "optimal" and res.value == -1


def test_feasible_point_satisfies_rows():
    A, b = [[1, 1], [-1, 2], [0, -1]], [2, 1, 0]
    x = feasible_point(A, b, n=2)
    assert all(sum(F(a) * xi for a, xi in zip(r, x)) <= bi for r, bi in zip(A, b))


coef = st.integers(-4, 4)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(coef, coef, coef, st.integers(0, 6)), min_size=1, max_size=5), st.tuples(coef, coef, coef))
def test_matches_highs(rows, c):
    A = [r[:3] for r in rows]
    b = [r[3] for r in rows]
    bounds = [(-10, 10)] * 3
    # box the problem so both solvers see a bounded LP
    box_A = A + [[1 if j == k else 0 for j in range(3)] for k in range(3)] + \
        [[-1 if j == k else 0 for j in range(3)] for k in range(3)]
    box_b = b + [10] * 6
    ours = linprog(list(c), box_A, box_b)
    ref = so.linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    assert ours.status == "optimal" and ref.status == 0
    assert abs(float(ours.value) - ref.fun) < 1e-7
    assert all(sum(F(a) * x for a, x in zip(r, ours.x)) <= bi for r, bi in zip(box_A, box_b))


# ---------------------------------------------------------------- index templates

@pytest.mark.parametrize("expr, i, want", [
    ("i", 3, 3), ("1/i", 4, F(1, 4)), ("i^2 - 2*i + 1", 5, 16), ("(i+1)/(2*i)", 3, F(2, 3)), ("-3", 9, -3),
    ("1/(4*i)", 2, F(1, 8)),
])
def test_template_evaluation(expr, i, want):
    assert tp.parse(expr)(i) == want


@pytest.mark.parametrize("bad", ["i +", "x", "i ** ", "sin(i)", "i // 2"])
def test_template_rejects(bad):
    with pytest.raises(tp.TemplateError):
        tp.parse(bad)


def test_limit_direction():
    def lim(*v):
        return tp.limit_direction([tp.parse(c) for c in v])

    assert lim(1, "i") == (0, 1)
    assert lim("2*i", "i") == (2, 1)
    assert lim("1/i", "-1") == (0, -1)
    assert lim(0, 0) is None


def test_negative_for_all():
    assert tp.negative_for_all(tp.parse("-1/i"))
    assert not tp.negative_for_all(tp.parse("i - 5"))
    assert tp.negative_for_all(tp.parse("1/i - 1"), start=2)
    assert not tp.negative_for_all(tp.parse("1/i - 1"), start=1)


@settings(max_examples=100, deadline=None)
@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(1, 5), st.integers(1, 40))
def test_template_arithmetic_matches_fractions(a, b, d, i):
    expr = f"({a}*i^2 + {b})/({d}*i)"
    assert tp.parse(expr)(i) == F(a * i * i + b, d * i)
