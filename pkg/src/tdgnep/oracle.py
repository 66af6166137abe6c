"""Exhaustive grid oracles for desk-scale instances.

Both oracles restrict every player to a uniform grid over its ambient box,
compute best responses over that same grid, and return the profiles with the
smallest grid Nikaido-Isoda gap.  They share no code with the solver.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .economy import EconomyModel, compute_R, consumer_upper, truncated_consumption_bound
from .gnep import GnepInstance, StrategyProfile

DEFAULT_BUDGET = 50_000_000
MAX_RESOLUTION = 21
TIE_TOL = 1e-12


class OracleRefused(ValueError):
    """The search space exceeds the configured budget."""

    def __init__(self, msg, estimate):
        super().__init__(msg)
        self.estimate = estimate


@dataclass
class OracleResult:
    profiles: list  # each entry: list of per-player arrays
    gap: float
    resolution: int
    steps: list = field(default_factory=list)  # per-player grid spacing arrays
    evaluated: int = 0

    def nearest(self, blocks) -> list:
        """Minimal-gap profile closest (in grid cells, max norm) to ``blocks``."""
        return min(self.profiles, key=lambda prof: self.cell_deviation(prof, blocks))

    def cell_deviation(self, prof, blocks) -> float:
        worst = 0.0
        for o, x, h in zip(prof, blocks, self.steps):
            x = np.asarray(getattr(x, "values", x), dtype=float)
            d = np.abs(np.asarray(o) - x)
            with np.errstate(divide="ignore", invalid="ignore"):
                cells = np.where(h > 0, d / np.where(h > 0, h, 1.0), np.where(d > 1e-12, np.inf, 0.0))
            worst = max(worst, float(cells.max()) if cells.size else 0.0)
        return worst


def _axis(lo, hi, g):
    return np.linspace(lo, hi, g) if hi > lo else np.array([lo])


def box_grid(lower, upper, g: int) -> np.ndarray:
    """All points of a ``g``-per-coordinate grid over a box, as ``(N,) + shape``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    axes = [_axis(lo, hi, g) for lo, hi in zip(lower.ravel(), upper.ravel())]
    pts = np.array(list(itertools.product(*axes)), dtype=float)
    return pts.reshape((len(pts),) + lower.shape)


def _step(lower, upper, g):
    return (np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float)) / (g - 1)


def grid_best_value(inst: GnepInstance, nu: int, x: StrategyProfile, g: int, cands=None):
    """Best grid value of player ``nu`` against ``x^{-nu}``; ``(value, point)``."""
    box = inst.players[nu].ambient
    cands = box_grid(box.lower, box.upper, g) if cands is None else cands
    fs = inst.feasible_set(nu, x)
    best, arg = -np.inf, None
    for y in cands:
        if not fs.contains(y):
            continue
        v = inst.theta(nu, x.replace(nu, y))
        if v > best:
            best, arg = v, y
    return best, arg


def grid_oracle(inst: GnepInstance, resolution: int = 11, budget: int = 2_000_000) -> OracleResult:
    """Minimal grid-gap profiles of a tiny generic GNEP."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    cands = [box_grid(p.ambient.lower, p.ambient.upper, resolution) for p in inst.players]
    n_prof = int(np.prod([len(c) for c in cands], dtype=float))
    estimate = n_prof * sum(len(c) for c in cands)
    if estimate > budget:
        raise OracleRefused(f"grid oracle needs about {estimate:.3g} evaluations (budget {budget:.3g})", estimate)
    best_gap, winners = np.inf, []
    for combo in itertools.product(*cands):
        x = StrategyProfile(inst.grid, list(combo))
        gap = 0.0
        for nu in range(len(inst)):
            if not inst.feasible_set(nu, x).contains(combo[nu]):
                gap = np.inf
                break
            v, _ = grid_best_value(inst, nu, x, resolution, cands[nu])
            gap += v - inst.theta(nu, x)
        if gap < best_gap - TIE_TOL:
            best_gap, winners = gap, [list(combo)]
        elif abs(gap - best_gap) <= TIE_TOL:
            winners.append(list(combo))
    steps = [_step(p.ambient.lower, p.ambient.upper, resolution) for p in inst.players]
    return OracleResult(winners, float(best_gap), resolution, steps, estimate)


def oracle_size(model: EconomyModel, resolution: int) -> int:
    """Number of (production, consumption, price) grid triples the economy oracle scans."""
    g, l = resolution, model.l
    n_a = g ** (l * model.s)
    n_b = g ** (l * model.r)
    n_p = len(_price_points(g, l))
    return int(n_a * n_b * n_p)


def _price_points(g: int, l: int) -> np.ndarray:
    """Price-set grid for ``m = 1`` (integer lattice, so normalization holds exactly)."""
    pts = [k for k in itertools.product(range(g), repeat=l) if sum(k) == g - 1]
    return np.array(pts, dtype=float) / (g - 1)


def brute_force_oracle(model: EconomyModel, resolution: int = 21, budget: int = DEFAULT_BUDGET,
                       R: float | None = None) -> OracleResult:
    """Grid equilibria of a one-interval economy with ``l <= 2``, ``s <= 1``, ``r <= 1``.

    Profiles are returned as ``[a^1, ..., b^1, ..., p]`` arrays of shape ``(1, l)``.
    """
    m, l = model.shape
    if m != 1 or l > 2 or model.s > 1 or model.r > 1:
        raise ValueError(f"oracle supports m = 1, l <= 2, s <= 1, r <= 1 (got m={m}, l={l}, "
                         f"s={model.s}, r={model.r})")
    if not 2 <= resolution <= MAX_RESOLUTION:
        raise ValueError(f"resolution must lie in [2, {MAX_RESOLUTION}]")
    size = oracle_size(model, resolution)
    if size > budget:
        raise OracleRefused(f"oracle search space has {size:.3g} profiles (budget {budget:.3g})", size)

    g, T, dt = resolution, model.grid.horizon, model.grid.dt
    R = compute_R(model) if R is None else R
    caps = truncated_consumption_bound(model, R) if model.truncate else None

    # candidate lists, one row per grid point, flattened to length l (m = 1)
    if model.s:
        ps = model.producers[0].production
        A = box_grid(ps.lower[0], ps.upper[0], g)
        A = A[[ps.as_set(dt).contains(a[None, :]) for a in A]]
        a_step = _step(ps.lower, ps.upper, g)
    else:
        A, a_step = np.zeros((1, l)), None
    P = _price_points(g, l) * (T / dt)
    p_step = np.full((1, l), (T / dt) / (g - 1))

    c = model.consumers[0]
    lb, ub = model.consumer_lower(0), consumer_upper(model, 0, caps)
    B = box_grid(lb[0], ub[0], g)
    if caps is not None:
        B = B[np.all(dt * B <= caps * (1 + 1e-12), axis=1)]
    b_step = _step(lb, ub, g)
    U = np.array([c.utility.value(b[None, :], c.lower, dt) for b in B])
    xi = c.endowment[0]

    # producer: theta = T p.a  (dt = T when m = 1)
    PA = dt * P @ A.T                                   # (nP, nA)
    prod_gap = PA.max(axis=1, keepdims=True) - PA       # (nP, nA)
    if not model.s:
        prod_gap = np.zeros_like(prod_gap)

    # consumer: budget dt p.b <= dt p.xi + max(0, alpha dt p.a)
    alpha = model.alpha[0, 0] if model.s else 0.0
    W = dt * (P @ xi)[:, None] + np.maximum(0.0, alpha * PA)  # (nP, nA)
    cost = dt * P @ B.T                                  # (nP, nB)
    slack = 1e-12 * np.maximum(1.0, np.abs(W))
    feas = cost[:, None, :] <= (W + slack)[:, :, None]   # (nP, nA, nB)
    best_u = np.where(feas, U[None, None, :], -np.inf).max(axis=2)  # (nP, nA)
    cons_gap = best_u[:, :, None] - U[None, None, :]

    # price player: theta = dt p.z, best value T max_h z_h
    Z = B[None, :, :] - xi[None, None, :] - A[:, None, :]  # (nA, nB, l)
    price_best = T * Z.max(axis=2)                          # (nA, nB)
    price_val = dt * np.einsum("ph,abh->pab", P, Z)         # (nP, nA, nB)
    price_gap = price_best[None] - price_val

    gap = prod_gap[:, :, None] + cons_gap + price_gap
    gap = np.where(feas, gap, np.inf)
    best = float(gap.min())
    ip, ia, ib = np.nonzero(gap <= best + TIE_TOL * max(1.0, abs(best)))
    profiles = []
    for kp, ka, kb in zip(ip, ia, ib):
        prof = ([A[ka][None, :]] if model.s else []) + [B[kb][None, :], P[kp][None, :]]
        profiles.append(prof)
    steps = ([a_step] if model.s else []) + [b_step, p_step]
    return OracleResult(profiles, best, g, steps, size)


__all__ = [
    "OracleResult",
    "OracleRefused",
    "box_grid",
    "grid_best_value",
    "grid_oracle",
    "brute_force_oracle",
    "oracle_size",
]
