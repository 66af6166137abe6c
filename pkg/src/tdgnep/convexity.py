"""Sampling checks of (semistrict) quasiconcavity.

A pass is evidence only: the checks look for a violating triple
``(x, y, lam)`` among random draws and report the first one found.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

QC_TOL = 1e-10
DISTINCT_TOL = 1e-8


@dataclass(frozen=True)
class Counterexample:
    x: Any
    y: Any
    lam: float
    f_x: float
    f_y: float
    f_mix: float


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    trials: int
    counterexample: Counterexample | None = None

    def __bool__(self):
        return self.passed


def _mix(lam, x, y):
    if hasattr(x, "values") and hasattr(x, "grid"):
        from .fnspace import combine
        return combine(lam, x, y)
    return lam * np.asarray(x) + (1.0 - lam) * np.asarray(y)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def check_quasiconcave(f: Callable, sampler: Callable, trials: int = 1000, seed=0) -> CheckResult:
    """Look for ``f(lam x + (1 - lam) y) < min(f(x), f(y)) - 1e-10``.

    ``sampler(rng)`` draws a point of a convex domain.
    """
    rng = _rng(seed)
    for n in range(trials):
        x, y, lam = sampler(rng), sampler(rng), float(rng.uniform())
        fx, fy = f(x), f(y)
        fz = f(_mix(lam, x, y))
        if fz < min(fx, fy) - QC_TOL:
            return CheckResult(False, n + 1, Counterexample(x, y, lam, fx, fy, fz))
    return CheckResult(True, trials)


def check_semistrict(f: Callable, sampler: Callable, trials: int = 1000, seed=0) -> CheckResult:
    """Quasiconcavity plus ``f(z) > min(f(x), f(y))`` whenever ``f(x) != f(y)``.

    ``lam`` is drawn from ``[0.05, 0.95]``; values closer than 1e-8 count as equal.
    """
    rng = _rng(seed)
    plain = check_quasiconcave(f, sampler, trials, rng)
    if not plain:
        return plain
    for n in range(trials):
        x, y, lam = sampler(rng), sampler(rng), float(rng.uniform(0.05, 0.95))
        fx, fy = f(x), f(y)
        if abs(fx - fy) <= DISTINCT_TOL:
            continue
        fz = f(_mix(lam, x, y))
        if not fz > min(fx, fy):
            return CheckResult(False, n + 1, Counterexample(x, y, lam, fx, fy, fz))
    return CheckResult(True, trials)
