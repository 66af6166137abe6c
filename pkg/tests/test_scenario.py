import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIXTURES, SCENARIOS
from tdgnep.economy import validate
from tdgnep.errors import ScenarioError
from tdgnep.scenario import load_scenario, parse_scenario, serialize_scenario

MINIMAL = """\
# one producer, one consumer, two goods
[model]
horizon = 1.0
intervals = 2
commodities = 2

[producer mill]
lower = -1, -1
upper = 1, 1   # trailing comment

[consumer ann]
endowment = 1, 0.5
lower = 0, 0
utility = shifted_log
weights = 0.5, 0.5
offset = 0.1
shares = 1

[solver]
seed = 3
"""


def test_minimal_scenario():
    sc = parse_scenario(MINIMAL)
    model = sc.build()
    assert (model.s, model.r, model.l) == (1, 1, 2)
    assert sc.solver.seed == 3 and sc.solver.response == "extragradient"
    np.testing.assert_array_equal(model.consumers[0].endowment, [[1, 0.5], [1, 0.5]])
    assert validate(model)


def test_interval_major_arrays():
    text = MINIMAL.replace("endowment = 1, 0.5", "endowment = 1, 0.5, 2, 0.25")
    model = parse_scenario(text).build()
    np.testing.assert_array_equal(model.consumers[0].endowment, [[1, 0.5], [2, 0.25]])
    with pytest.raises(ScenarioError, match="expected 2 or 4"):
        parse_scenario(MINIMAL.replace("endowment = 1, 0.5", "endowment = 1, 0.5, 2")).build()


def test_duplicate_key_names_line():
    text = MINIMAL.replace("offset = 0.1\n", "offset = 0.1\noffset = 0.2\n")
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    first = text.splitlines().index("offset = 0.1") + 1
    assert err.value.line == first + 1
    assert "duplicate key 'offset'" in str(err.value) and f"line {first}" in str(err.value)


def test_duplicate_section():
    with pytest.raises(ScenarioError, match="duplicate section"):
        parse_scenario(MINIMAL + "\n[solver]\nseed = 1\n")


def test_unknown_key_names_line():
    text = MINIMAL.replace("seed = 3", "seed = 3\nsmoothing = 2")
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    assert "unknown key 'smoothing'" in str(err.value)
    assert err.value.line == text.splitlines().index("smoothing = 2") + 1


@pytest.mark.parametrize("text, msg", [
    (MINIMAL.replace("seed = 3", "max_iters = 3"), "missing required key 'seed'"),
    (MINIMAL.replace("[solver]\nseed = 3\n", ""), "seed is mandatory"),
    (MINIMAL.replace("horizon = 1.0", "horizon = soon"), "horizon"),
    (MINIMAL.replace("intervals = 2", "intervals = 0"), "intervals"),
    (MINIMAL.replace("utility = shifted_log", "utility = cobb"), "utility"),
    ("horizon = 1\n", "outside of any section"),
    (MINIMAL.replace("[consumer ann]", "[consumer]"), "needs a name"),
    (MINIMAL.replace("seed = 3", "seed = 3\nresponse = extragradient\norder = gauss-seidel"), "solver"),
])
def test_errors(text, msg):
    with pytest.raises(ScenarioError, match=msg):
        parse_scenario(text)


def test_shares_row_length_is_a_validation_error():
    text = MINIMAL.replace("shares = 1", "shares = 0.5, 0.5")
    report = validate(parse_scenario(text).build())
    assert not report
    assert any("shares row length ≠ s" in v for v in report.violations)


def test_overrides():
    sc = parse_scenario(MINIMAL, ["solver.max_iters=7", "consumer.ann.offset=0.25", "model.intervals=3"])
    assert sc.solver.max_iters == 7
    assert sc.consumers[0].offset == 0.25
    assert sc.build().shape == (3, 2)
    for bad in ["solver.max_iters", "consumer.offset=1", "producer.nobody.lower=0"]:
        with pytest.raises(ScenarioError):
            parse_scenario(MINIMAL, [bad])


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_round_trip(name):
    sc = load_scenario(SCENARIOS / f"{name}.scn")
    text = serialize_scenario(sc)
    assert parse_scenario(text) == sc
    assert serialize_scenario(parse_scenario(text)) == text


reals = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(st.integers(1, 5), st.integers(0, 2**31), st.lists(reals, min_size=2, max_size=2), reals,
       st.floats(1e-3, 1e3), st.sampled_from(["best", "projection", "extragradient"]))
def test_round_trip_random(m, seed, weights, offset, horizon, response):
    w = ", ".join(repr(v) for v in weights)
    text = (MINIMAL.replace("weights = 0.5, 0.5", f"weights = {w}").replace("offset = 0.1", f"offset = {offset!r}")
            .replace("horizon = 1.0", f"horizon = {horizon!r}").replace("intervals = 2", f"intervals = {m}")
            .replace("seed = 3", f"seed = {seed}\nresponse = {response}"))
    sc = parse_scenario(text)
    assert parse_scenario(serialize_scenario(sc)) == sc
    assert sc.consumers[0].weights == tuple(weights)
