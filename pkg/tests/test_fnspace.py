import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tdgnep.errors import ShapeError
from tdgnep.fnspace import Trajectory, combine, inner_product, make_grid, norm

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def traj_pair(max_m=6, max_d=3):
    @st.composite
    def build(draw):
        m = draw(st.integers(1, max_m))
        d = draw(st.integers(1, max_d))
        T = draw(st.floats(0.1, 10.0))
        g = make_grid(T, m)
        a = draw(arrays(float, (m, d), elements=finite))
        b = draw(arrays(float, (m, d), elements=finite))
        return Trajectory(g, a), Trajectory(g, b)

    return build()


def test_make_grid():
    g = make_grid(1.0, 4)
    assert g.dt == 0.25
    np.testing.assert_allclose(g.nodes, [0.125, 0.375, 0.625, 0.875])
    assert make_grid(2.0, 1).dt == 2.0


@pytest.mark.parametrize("T, m", [(1.0, 0), (0.0, 3), (-1.0, 2), (1.0, 2.5)])
def test_make_grid_rejects(T, m):
    with pytest.raises(ValueError):
        make_grid(T, m)


def test_inner_product_examples():
    for m in (1, 3, 10):
        g = make_grid(1.0, m)
        one = Trajectory.constant(g, 1.0)
        assert inner_product(one, one) == pytest.approx(1.0, rel=1e-15)
    g = make_grid(1.0, 2)
    t = Trajectory.sample(g, lambda t: t)
    np.testing.assert_array_equal(t.values[:, 0], [0.25, 0.75])
    assert inner_product(t, Trajectory.constant(g, 1.0)) == pytest.approx(0.5, abs=1e-15)
    g2 = make_grid(2.0, 2)
    assert inner_product(Trajectory(g2, [1.0, -1.0]), Trajectory(g2, [1.0, 1.0])) == 0.0


def test_shape_errors():
    g = make_grid(1.0, 2)
    with pytest.raises(ShapeError):
        inner_product(Trajectory.zeros(g, 1), Trajectory.zeros(g, 2))
    with pytest.raises(ShapeError):
        inner_product(Trajectory.zeros(g, 1), Trajectory.zeros(make_grid(1.0, 3), 1))
    with pytest.raises(ValueError):
        Trajectory(g, [[np.nan], [0.0]])


def test_norm_examples():
    assert norm(Trajectory.zeros(make_grid(1.0, 3), 2)) == 0.0
    assert norm(Trajectory.constant(make_grid(4.0, 5), 1.0)) == pytest.approx(2.0)
    assert norm(Trajectory(make_grid(1.0, 1), [[3.0, 4.0]])) == pytest.approx(5.0)


def test_combine_examples():
    g = make_grid(1.0, 3)
    x, y = Trajectory.constant(g, 2.0), Trajectory.zeros(g, 1)
    assert combine(1.0, x, y) is x
    assert combine(0.0, x, y) is y
    assert combine(0.5, x, y) == Trajectory.constant(g, 1.0)
    for lam in (-0.1, 1.5):
        with pytest.raises(ValueError):
            combine(lam, x, y)


def test_immutable():
    t = Trajectory.zeros(make_grid(1.0, 2), 1)
    with pytest.raises(ValueError):
        t.values[0, 0] = 1.0
    with pytest.raises(AttributeError):
        t.values = None


@given(traj_pair(), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_bilinearity(pair, a, b, seed):
    phi, psi = pair
    chi = Trajectory(phi.grid, np.random.default_rng(seed).standard_normal(phi.values.shape))
    lhs = inner_product(a * phi + b * chi, psi)
    rhs = a * inner_product(phi, psi) + b * inner_product(chi, psi)
    scale = phi.grid.dt * (abs(a) * np.abs(phi.values) + abs(b) * np.abs(chi.values)).ravel() @ np.abs(psi.values).ravel()
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1e-300)


@given(traj_pair())
def test_cauchy_schwarz(pair):
    phi, psi = pair
    assert abs(inner_product(phi, psi)) <= norm(phi) * norm(psi) * (1 + 1e-12) + 1e-12


@given(traj_pair(), st.integers(2, 4))
def test_refinement_consistency(pair, factor):
    phi, psi = pair
    fine = phi.grid.refine(factor)
    up = lambda t: Trajectory(fine, np.repeat(t.values, factor, axis=0))
    coarse = inner_product(phi, psi)
    refined = inner_product(up(phi), up(psi))
    scale = phi.grid.dt * np.abs(phi.values).ravel() @ np.abs(psi.values).ravel()
    assert abs(coarse - refined) <= 1e-12 * max(scale, 1e-300)


@given(traj_pair(), st.floats(0, 1))
def test_combine_self_is_exact(pair, lam):
    x, _ = pair
    assert combine(lam, x, x) == x
