import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from tdgnep.errors import InfeasibleError
from tdgnep.sets import Box, BudgetSet, Polytope, ScaledSimplex, simplex_projection


def slsqp_projection(q, lower, upper, ineqs):
    """Reference projection by a general-purpose NLP solver (ineqs: list of (row, rhs), row.y <= rhs)."""
    shape = q.shape
    cons = [{"type": "ineq", "fun": lambda y, r=r, b=b: b - r @ y, "jac": lambda y, r=r: -r} for r, b in ineqs]
    res = minimize(lambda y: 0.5 * np.sum((y - q.ravel()) ** 2), np.clip(q, lower, upper).ravel(),
                   jac=lambda y: y - q.ravel(), bounds=list(zip(lower.ravel(), upper.ravel())),
                   constraints=cons, method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    return res.x.reshape(shape)


def test_box_linear_max_tie_break():
    b = Box(-np.ones((2, 2)), np.ones((2, 2)), 0.5)
    np.testing.assert_array_equal(b.linear_max(np.ones((2, 2))), np.ones((2, 2)))
    y = b.linear_max(np.array([[1.0, 0.0], [-2.0, 0.0]]))
    np.testing.assert_array_equal(y, [[1.0, 0.0], [-1.0, 0.0]])


def test_box_requires_finite_bounds():
    with pytest.raises(ValueError):
        Box(np.zeros(2), np.array([1.0, np.inf]), 1.0)


@given(st.integers(0, 10**6), st.floats(0.1, 5.0))
def test_simplex_projection_kkt(seed, total):
    v = np.random.default_rng(seed).normal(size=7)
    y = simplex_projection(v, total)
    assert y.min() >= 0 and y.sum() == pytest.approx(total)
    # y = max(v - theta, 0) for a single threshold theta
    theta = (v - y)[y > 0]
    assert np.ptp(theta) < 1e-12
    assert np.all(v[y == 0] <= theta[0] + 1e-12)


def test_scaled_simplex_examples():
    P = ScaledSimplex((1, 2), 1.0, 1.0)
    np.testing.assert_allclose(P.project(np.array([[3.0, 1.0]])), [[1.0, 0.0]])
    np.testing.assert_allclose(P.project(np.array([[-1.0, -1.0]])), [[0.5, 0.5]])
    P = ScaledSimplex((4, 2), 0.25, 1.0)
    assert P.mass == 4.0
    u = np.full((4, 2), 0.5)
    np.testing.assert_array_equal(P.project(u), u)
    assert P.violation(u + 0.1)[0] == "normalization"
    assert P.violation(u - 0.6)[0] == "nonnegativity"


@given(st.integers(0, 10**6))
def test_scaled_simplex_linear_max_is_lexicographic_vertex(seed):
    rng = np.random.default_rng(seed)
    m, l = 3, 2
    c = rng.integers(-2, 3, size=(m, l)).astype(float)  # ties are common
    P = ScaledSimplex((m, l), 0.5, 1.5)
    y = P.linear_max(c)
    best = max(c[k, h] for h in range(l) for k in range(m))
    h0, k0 = min((h, k) for h in range(l) for k in range(m) if c[k, h] == best)
    np.testing.assert_array_equal(y, P.vertex(k0, h0))


@given(st.integers(0, 10**6), st.booleans())
def test_budget_projection_matches_reference(seed, capped):
    rng = np.random.default_rng(seed)
    m, l, dt = 3, 2, 0.5
    lower = np.zeros((m, l))
    upper = rng.uniform(0.5, 3.0, (m, l))
    price = rng.uniform(0.0, 2.0, (m, l))
    wealth = float(rng.uniform(0.2, 2.0))
    caps = rng.uniform(0.3, 2.0, l) if capped else None
    fs = BudgetSet(lower, upper, price, wealth, dt, caps)
    q = rng.normal(1.0, 2.0, (m, l))
    y = fs.project(q)
    assert fs.contains(y, 1e-12)
    ineqs = [(dt * price.ravel(), wealth)]
    if capped:
        for h in range(l):
            row = np.zeros((m, l))
            row[:, h] = dt
            ineqs.append((row.ravel(), caps[h]))
    ref = slsqp_projection(q, lower, upper, ineqs)
    assert np.sum((y - q) ** 2) <= np.sum((ref - q) ** 2) + 1e-9
    np.testing.assert_allclose(y, ref, atol=1e-5)


def test_budget_violation_names():
    fs = BudgetSet(np.zeros((1, 2)), np.full((1, 2), 5.0), np.ones((1, 2)), 1.0, 1.0, caps=np.array([0.5, 5.0]))
    assert fs.violation(np.array([[0.3, 0.9]]))[0] == "budget"
    name, amount = fs.violation(np.array([[0.6, 0.1]]))
    assert name == "cap[0]" and amount == pytest.approx(0.1)
    assert fs.violation(np.array([[-0.1, 0.0]])) is not None
    assert fs.contains(np.array([[0.5, 0.5]]))


def test_empty_budget_set():
    fs = BudgetSet(np.ones((1, 1)), np.full((1, 1), 2.0), np.ones((1, 1)), 0.5, 1.0)
    assert fs.is_empty()
    with pytest.raises(InfeasibleError):
        fs.project(np.zeros((1, 1)))


@given(st.integers(0, 10**6))
def test_budget_linear_max_matches_vertex_scan(seed):
    rng = np.random.default_rng(seed)
    fs = BudgetSet(np.zeros((1, 2)), np.full((1, 2), 2.0), rng.uniform(0.1, 1.0, (1, 2)), 1.0, 1.0)
    c = rng.normal(size=(1, 2))
    y = fs.linear_max(c)
    assert fs.contains(y, 1e-9)
    # the optimum sits at a vertex: intersect the budget line with box edges
    pts = [np.array(v, float) for v in itertools.product([0.0, 2.0], repeat=2)]
    p = fs.price[0]
    for h in range(2):
        for fixed in (0.0, 2.0):
            other = 1 - h
            val = (fs.wealth - p[h] * fixed) / p[other]
            pt = np.zeros(2)
            pt[h], pt[other] = fixed, val
            pts.append(pt)
    feas = [pt for pt in pts if fs.contains(pt[None, :], 1e-12)]
    best = max(float(c[0] @ pt) for pt in feas)
    assert float(c[0] @ y[0]) == pytest.approx(best, abs=1e-9)


@given(st.integers(0, 10**6))
def test_polytope_projection_matches_reference(seed):
    rng = np.random.default_rng(seed)
    m, l, dt = 2, 2, 0.5
    lower, upper = -np.ones((m, l)), np.ones((m, l))
    cuts = [(rng.normal(size=(m, l)), float(rng.uniform(0.05, 0.5))) for _ in range(2)]
    fs = Polytope(lower, upper, dt, cuts)
    q = rng.normal(0.0, 2.0, (m, l))
    y = fs.project(q)
    assert fs.contains(y, 1e-7)
    ref = slsqp_projection(q, lower, upper, [(dt * c.ravel(), r) for c, r in cuts])
    np.testing.assert_allclose(y, ref, atol=1e-5)


def test_polytope_linear_max_and_violation():
    fs = Polytope(-np.ones((1, 2)), np.ones((1, 2)), 1.0, [(np.ones((1, 2)), 0.5)])
    y = fs.linear_max(np.ones((1, 2)))
    assert float(y.sum()) == pytest.approx(0.5)
    assert fs.violation(np.ones((1, 2)))[0] == "cut[0]"
