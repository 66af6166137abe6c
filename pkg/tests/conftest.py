from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from tdgnep.cli import main
from tdgnep.fnspace import Trajectory, make_grid

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
FIXTURES = ["cobb2", "cobb2_m1", "two_consumers", "linear", "satiated", "cut_producer", "tiny_exchange",
            "tiny_single"]
TINY = ["cobb2_m1", "tiny_exchange", "tiny_single"]

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE = {}


def random_traj(rng, grid, dim, scale=1.0):
    return Trajectory(grid, scale * rng.standard_normal((grid.intervals, dim)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid4():
    return make_grid(1.0, 4)


@pytest.fixture(scope="session")
def solved(tmp_path_factory):
    """Run ``tdgnep solve`` once per fixture; maps name -> (exit code, run dir)."""
    base = tmp_path_factory.mktemp("runs")
    out = {}
    for name in FIXTURES:
        d = base / name
        code = main(["solve", str(SCENARIOS / f"{name}.scn"), "--out-dir", str(d)])
        out[name] = (code, d)
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
