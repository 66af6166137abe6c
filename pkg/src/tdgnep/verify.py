"""Certificates for candidate economic equilibria.

Each check recomputes its maximum independently of the solver: producers by
closed form (or an LP when cuts are present), the price player by vertex
enumeration of the price set, consumers by the utility's own exact maximizer.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .economy import (
    EconomyModel,
    LinearUtility,
    QuadraticUtility,
    compute_R,
    consumer_set,
    excess_demand,
    price_set,
    truncated_consumption_bound,
)
from .errors import MembershipError
from .sets import FEAS_TOL

PRICE_TOL = 1e-10
SATIATION_TOL = 1e-8
CAP_SLACK_TOL = 1e-6


@dataclass(frozen=True)
class Tolerances:
    producer: float = 1e-8
    consumer: float = 1e-6
    price: float = 1e-6
    clearing: float = 1e-6
    walras: float = 1e-6
    inner: float = 1e-9
    membership: float = FEAS_TOL


@dataclass
class EquilibriumCertificate:
    producer_gaps: list
    consumer_gaps: list
    price_gap: float
    clearing_integrals: list
    walras_residual: float
    walras_applicable: bool
    walras_reason: str
    producer_profits: list
    tolerances: Tolerances = field(default_factory=Tolerances)

    def failures(self) -> list:
        tol = self.tolerances
        out = []
        for j, g in enumerate(self.producer_gaps):
            if g > tol.producer:
                out.append(f"producer {j + 1} gap {g:.3e} > {tol.producer:g}")
        for i, g in enumerate(self.consumer_gaps):
            if g > tol.consumer:
                out.append(f"consumer {i + 1} gap {g:.3e} > {tol.consumer:g}")
        if self.price_gap > tol.price:
            out.append(f"price gap {self.price_gap:.3e} > {tol.price:g}")
        for h, c in enumerate(self.clearing_integrals):
            if c > tol.clearing:
                out.append(f"clearing integral of commodity {h + 1} is {c:.3e} > {tol.clearing:g}")
        if self.walras_applicable and abs(self.walras_residual) > tol.walras:
            out.append(f"|walras residual| {abs(self.walras_residual):.3e} > {tol.walras:g}")
        if not self.walras_applicable and self.walras_residual > tol.walras:
            out.append(f"walras residual {self.walras_residual:.3e} > {tol.walras:g}")
        return out

    @property
    def accepted(self) -> bool:
        return not self.failures()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["accepted"] = self.accepted
        return d


def _arr(v):
    return np.asarray(getattr(v, "values", v), dtype=float)


def _require(model, fs, y, what, tol, player=None):
    bad = fs.violation(y, tol)
    if bad is not None:
        name, amount = bad
        raise MembershipError(f"{what} violates {name} by {amount:.3e}", constraint=name, slack=-amount,
                              player=player)


def check_pp(model: EconomyModel, a: Sequence, p, tol: float = FEAS_TOL) -> list:
    """Producer gaps ``max_{A_j} <<p, .>> - <<p, a^j>>``."""
    p = _arr(p)
    dt = model.grid.dt
    gaps = []
    for j, (pr, aj) in enumerate(zip(model.producers, a)):
        aj = _arr(aj)
        fs = pr.production.as_set(dt)
        _require(model, fs, aj, f"production plan {j + 1}", tol, player=j)
        best = fs.linear_max(p)
        gaps.append(max(0.0, float(dt * np.vdot(p, best - aj))))
    return gaps


def consumer_value_max(model: EconomyModel, i: int, a, p, R=None):
    """Exact ``max u_i`` over ``D_i(a, p)`` (with truncation) and a maximizer."""
    c = model.consumers[i]
    dt = model.grid.dt
    fs = consumer_set(model, i, a, p, R)
    u = c.utility
    y = fs.linear_max(u.weights) if isinstance(u, LinearUtility) else u.maximize(fs, c.lower, dt)
    return u.value(y, c.lower, dt), y


def check_cp(model: EconomyModel, a: Sequence, b: Sequence, p, eps_inner: float = 1e-9,
             tol: float = FEAS_TOL, R=None) -> list:
    """Consumer gaps ``max_{D_i(a, p)} u_i - u_i(b^i)``."""
    dt = model.grid.dt
    gaps = []
    for i, (c, bi) in enumerate(zip(model.consumers, b)):
        bi = _arr(bi)
        fs = consumer_set(model, i, a, p, R)
        _require(model, fs, bi, f"consumption plan {i + 1}", tol, player=model.s + i)
        best, _ = consumer_value_max(model, i, a, p, R)
        gap = best - c.utility.value(bi, c.lower, dt)
        gaps.append(0.0 if gap < eps_inner and gap < 0 else max(0.0, gap))
    return gaps


def check_mp(model: EconomyModel, a: Sequence, b: Sequence, p) -> float:
    """Price gap ``T max z - <<p, z>>``; the max over the price set sits at a vertex."""
    p = _arr(p)
    P = price_set(model.grid, model.l)
    _require(model, P, p, "price trajectory", PRICE_TOL, player=model.s + model.r)
    z = excess_demand(model, a, b).values
    return max(0.0, float(model.grid.horizon * z.max() - model.grid.dt * np.vdot(p, z)))


def check_market_clearing(model: EconomyModel, a: Sequence, b: Sequence) -> list:
    """``int_0^T z_h dt`` per commodity."""
    return [float(v) for v in excess_demand(model, a, b).integral()]


def is_nonsatiated(model: EconomyModel, i: int, b, R=None) -> tuple:
    """Numerical non-satiation of consumer ``i`` at ``b`` with slack truncation caps."""
    c = model.consumers[i]
    dt = model.grid.dt
    b = _arr(b)
    if isinstance(c.utility, QuadraticUtility) and np.allclose(b, c.utility.target, atol=SATIATION_TOL):
        return False, "utility at its bliss point"
    fs = consumer_set(model, i, [np.zeros(model.shape)] * model.s, np.zeros(model.shape), R)
    g = np.array(c.utility.gradient(b, c.lower, dt), dtype=float)
    at_lo = b <= fs.lower + FEAS_TOL
    at_hi = b >= fs.upper - FEAS_TOL
    g[(at_lo & (g < 0)) | (at_hi & (g > 0))] = 0.0
    if np.sqrt(dt * np.vdot(g, g)) <= SATIATION_TOL:
        return False, "utility gradient vanishes on feasible directions"
    if fs.caps is not None and np.any(fs.cap_slack(b) <= CAP_SLACK_TOL):
        return False, "truncation cap active"
    return True, "non-satiated"


def check_walras(model: EconomyModel, a: Sequence, b: Sequence, p, R=None) -> tuple:
    """``(residual, applicable, reason)`` for the value of aggregate excess demand."""
    p = _arr(p)
    z = excess_demand(model, a, b).values
    residual = float(model.grid.dt * np.vdot(p, z))
    reasons = []
    for i in range(model.r):
        ok, why = is_nonsatiated(model, i, b[i], R)
        if ok:
            return residual, True, f"consumer {i + 1} non-satiated with slack caps"
        reasons.append(f"consumer {i + 1}: {why}")
    return residual, False, "; ".join(reasons) or "no consumers"


def certify(model: EconomyModel, a: Sequence, b: Sequence, p, tol: Tolerances = Tolerances(),
            R=None) -> EquilibriumCertificate:
    """Run every check; membership failures raise :class:`MembershipError`."""
    R = compute_R(model) if R is None else R
    pg = check_pp(model, a, p, tol.membership)
    cg = check_cp(model, a, b, p, tol.inner, tol.membership, R)
    mp = check_mp(model, a, b, p)
    clear = check_market_clearing(model, a, b)
    res, applicable, reason = check_walras(model, a, b, p, R)
    profits = [float(model.grid.dt * np.vdot(_arr(p), _arr(aj))) for aj in a]
    return EquilibriumCertificate(pg, cg, mp, clear, res, applicable, reason, profits, tol)


__all__ = [
    "Tolerances",
    "EquilibriumCertificate",
    "check_pp",
    "check_cp",
    "check_mp",
    "check_market_clearing",
    "check_walras",
    "certify",
    "consumer_value_max",
    "truncated_consumption_bound",
]
