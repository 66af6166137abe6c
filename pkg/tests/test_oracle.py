import numpy as np
import pytest

from conftest import SCENARIOS
from games import decoupled_game
from tdgnep.economy import Consumer, LinearUtility, build_model
from tdgnep.fnspace import make_grid
from tdgnep.oracle import OracleRefused, brute_force_oracle, grid_oracle, oracle_size
from tdgnep.scenario import load_scenario


def test_decoupled_grid_oracle_is_per_player_argmax():
    g = make_grid(1.0, 1)
    inst = decoupled_game(g, [1.0, -2.0])
    res = grid_oracle(inst, resolution=7)
    assert res.gap == 0.0
    assert len(res.profiles) == 1
    a, b = res.profiles[0]
    assert a.item() == 2.0 and b.item() == -1.0


def test_grid_oracle_refuses_with_estimate():
    inst = decoupled_game(make_grid(1.0, 3), [1.0, 1.0, 1.0])
    with pytest.raises(OracleRefused) as err:
        grid_oracle(inst, resolution=21, budget=1000)
    assert err.value.estimate > 1000
    assert "budget" in str(err.value)


def test_economy_oracle_refusal_and_scope():
    model = load_scenario(SCENARIOS / "tiny_exchange.scn").build()
    size = oracle_size(model, 21)
    with pytest.raises(OracleRefused) as err:
        brute_force_oracle(model, 21, budget=size - 1)
    assert err.value.estimate == size
    big = load_scenario(SCENARIOS / "cobb2.scn").build()
    with pytest.raises(ValueError, match="m = 1"):
        brute_force_oracle(big, 5)


def test_exchange_oracle_result_nonempty_and_feasible():
    model = load_scenario(SCENARIOS / "tiny_single.scn").build()
    res = brute_force_oracle(model, 11)
    assert res.profiles and np.isfinite(res.gap) and res.gap >= 0
    a, b, p = res.nearest([np.ones((1, 1)), np.full((1, 1), 3.0), np.ones((1, 1))])
    # one commodity: the price is pinned to the simplex mass, production at its top
    assert p.item() == pytest.approx(1.0)
    assert res.cell_deviation([a, b, p], [a, b, p]) == 0.0


def test_linear_exchange_oracle_prefers_full_spending():
    g = make_grid(1.0, 1)
    c = Consumer("c", np.array([[1.0, 1.0]]), np.zeros((1, 2)), LinearUtility(np.array([[1.0, 1.0]])))
    model = build_model(g, 2, [], [c], [[]])
    res = brute_force_oracle(model, 5)
    for b, p in res.profiles:
        assert np.vdot(p, b) == pytest.approx(p.sum(), abs=1e-9)
