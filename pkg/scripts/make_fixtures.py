"""Regenerate the scenario fixtures in ``scenarios/``.

Time-varying data are sampled at interval midpoints and written with 17
significant digits, so the files are exact descriptions of the models.
"""
import argparse
from pathlib import Path

import numpy as np

from tdgnep.fnspace import make_grid
from tdgnep.scenario import ConsumerSpec, ModelSpec, OutputSpec, ProducerSpec, Scenario, SolverSpec, serialize_scenario
from tdgnep.verify import Tolerances

ROOT = Path(__file__).resolve().parents[1]


def samples(m, T, *fns):
    """Interval-major samples of one function per commodity."""
    t = make_grid(T, m).nodes
    return tuple(float(v) for v in np.column_stack([np.broadcast_to(f(t), t.shape) for f in fns]).ravel())


def cobb2(m=8):
    up = samples(m, 1.0, lambda t: 0.5 + 0 * t, lambda t: 0.2 + 0.1 * np.cos(2 * np.pi * t))
    return Scenario(
        ModelSpec(1.0, m, 2),
        (ProducerSpec("plant", tuple(-v for v in up), up),),
        (ConsumerSpec("household", samples(m, 1.0, lambda t: 1 + 0.5 * np.sin(2 * np.pi * t), lambda t: 0.5 + 0 * t),
                      (0.0, 0.0), "shifted_log", shares=(1.0,), weights=(0.6, 0.4), offset=0.1),),
        SolverSpec(seed=0, gap_tol=1e-9),
    )


def two_consumers():
    m = 4
    return Scenario(
        ModelSpec(2.0, m, 2),
        (ProducerSpec("plant", (-0.4, -0.4), (0.6, 0.3)),),
        (ConsumerSpec("north", samples(m, 2.0, lambda t: 1 + 0.25 * t, lambda t: 0.4 + 0 * t), (0.0, 0.0),
                      "shifted_log", shares=(0.7,), weights=(0.5, 0.5), offset=0.2),
         ConsumerSpec("south", (0.3, 1.2), (0.0, 0.0), "shifted_log", shares=(0.3,), weights=(0.3, 0.7),
                      offset=0.1)),
        SolverSpec(seed=1, gap_tol=1e-9),
    )


def linear():
    m = 4
    return Scenario(
        ModelSpec(1.0, m, 2),
        (ProducerSpec("plant", (-0.5, -0.5), (0.5, 0.5)),),
        (ConsumerSpec("household", (1.0, 1.0), (0.0, 0.0), "linear", shares=(1.0,),
                      weights=samples(m, 1.0, lambda t: 1.0 + 0.5 * t, lambda t: 0.8 + 0 * t)),),
        SolverSpec(seed=2, gap_tol=1e-9),
    )


def satiated():
    m = 4
    return Scenario(
        ModelSpec(1.0, m, 2),
        (ProducerSpec("plant", (-0.3, -0.3), (0.3, 0.3)),),
        (ConsumerSpec("household", (1.0, 1.0), (0.0, 0.0), "quadratic", shares=(1.0,),
                      target=samples(m, 1.0, lambda t: 0.8 + 0.1 * t, lambda t: 0.6 + 0 * t), scale=1.0),),
        SolverSpec(seed=3, gap_tol=1e-9, step=0.25),
    )


def cut_producer():
    m = 4
    return Scenario(
        ModelSpec(1.0, m, 2),
        (ProducerSpec("plant", (-0.5, -0.5), (0.5, 0.5), cuts=(((1.0, 1.0), 0.2),)),),
        (ConsumerSpec("household", (1.0, 0.8), (0.0, 0.0), "shifted_log", shares=(1.0,), weights=(0.5, 0.5),
                      offset=0.1),),
        SolverSpec(seed=4, gap_tol=1e-9),
    )


def tiny_exchange():
    return Scenario(
        ModelSpec(1.0, 1, 2),
        (),
        (ConsumerSpec("trader", (2.0, 1.5), (0.0, 0.0), "shifted_log", weights=(0.6, 0.4), offset=0.5),),
        SolverSpec(seed=5, gap_tol=1e-9),
    )


def tiny_single():
    return Scenario(
        ModelSpec(1.0, 1, 1),
        (ProducerSpec("plant", (-1.0,), (1.0,)),),
        (ConsumerSpec("household", (2.0,), (0.0,), "shifted_log", shares=(1.0,), weights=(1.0,), offset=0.1),),
        SolverSpec(seed=6, gap_tol=1e-9),
    )


FIXTURES = {
    "cobb2": cobb2,
    "cobb2_m1": lambda: cobb2(1),
    "two_consumers": two_consumers,
    "linear": linear,
    "satiated": satiated,
    "cut_producer": cut_producer,
    "tiny_exchange": tiny_exchange,
    "tiny_single": tiny_single,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dest", default=str(ROOT / "scenarios"))
    args = ap.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    for name, make in FIXTURES.items():
        (dest / f"{name}.scn").write_text(serialize_scenario(make()), encoding="utf-8")
        print(dest / f"{name}.scn")


if __name__ == "__main__":
    main()
