import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog as scipy_linprog

from partmon import lp


def test_simple_optimum():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    res = lp.linprog(np.array([-1.0, -1.0]), np.array([[1.0, 2.0], [3.0, 1.0]]), np.array([4.0, 6.0]))
    assert res.success
    np.testing.assert_allclose(res.x, [1.6, 1.2], atol=1e-12)
    assert res.fun == pytest.approx(-2.8)


def test_infeasible():
    res = lp.linprog(np.zeros(1), np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
    assert res.status == lp.INFEASIBLE


def test_unbounded():
    res = lp.linprog(np.array([-1.0]), np.array([[-1.0]]), np.array([0.0]))
    assert res.status == lp.UNBOUNDED


def test_free_variable_and_redundant_equalities():
    A_eq = np.array([[1.0, 1.0], [2.0, 2.0]])
    A_ub, b_ub = np.array([[0.0, 1.0]]), np.array([3.0])
    res = lp.linprog(np.array([1.0, 0.0]), A_ub, b_ub, A_eq, np.array([1.0, 2.0]), free=np.array([True, False]))
    assert res.success
    np.testing.assert_allclose(res.x, [-2.0, 3.0], atol=1e-12)


@given(st.integers(0, 10_000))
def test_matches_scipy_on_random_bounded_problems(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 6), rng.integers(1, 8)
    A = rng.normal(size=(m, n))
    b = rng.random(m) + rng.choice([0.0, -0.5], size=m)
    c = rng.normal(size=n)
    # box keeps every problem bounded
    A_ub = np.vstack([A, np.eye(n)])
    b_ub = np.concatenate([b, np.full(n, 5.0)])
    ours = lp.linprog(c, A_ub, b_ub)
    ref = scipy_linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * n, method="highs")
    assert ours.success == (ref.status == 0)
    if ours.success:
        assert ours.fun == pytest.approx(ref.fun, abs=1e-7)
        assert np.all(A_ub @ ours.x <= b_ub + 1e-8)
        assert np.all(ours.x >= -1e-9)
