"""Time-dependent abstract economy and its reformulation as a GNEP.

``s`` producers choose plans ``a^j`` in boxes (optionally cut by affine
constraints) that contain 0; positive entries are outputs, negative ones
inputs.  ``r`` consumers choose ``b^i`` within their budget sets, intersected
with the truncation set that caps each commodity's consumption integral by the
total endowment plus a margin ``R``.  One price player picks ``p`` on the
scaled simplex ``P = {p >= 0, (1/T) int sum_h p_h = 1}`` and maximizes the
value of aggregate excess demand.

The word "price" always refers to ``p``; the game has ``s + r + 1`` players,
ordered producers, consumers, price player.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .convexity import check_semistrict
from .errors import InfeasibleError, ShapeError
from .fnspace import TimeGrid, Trajectory
from .gnep import ConcaveObjective, GnepInstance, LinearObjective, Player, StrategyProfile
from .sets import FEAS_TOL, BudgetSet, Box, FeasibleSet, Polytope, ScaledSimplex

SHARE_TOL = 1e-9


def _arr(v) -> np.ndarray:
    return np.asarray(getattr(v, "values", v), dtype=float)


def _frozen(v, shape=None) -> np.ndarray:
    a = np.array(getattr(v, "values", v), dtype=float)
    if shape is not None:
        a = np.broadcast_to(a, shape).copy()
    a.flags.writeable = False
    return a


# ------------------------------------------------------------------ utilities


@dataclass(frozen=True, eq=False)
class LinearUtility:
    """``u(b) = <<weights, b>>``."""

    weights: np.ndarray
    kind = "linear"
    name = "linear"

    def value(self, b, beta, dt):
        return float(dt * np.vdot(self.weights, b))

    def gradient(self, b, beta, dt):
        return np.broadcast_to(self.weights, np.shape(b))


@dataclass(frozen=True, eq=False)
class ShiftedLogUtility:
    """``u(b) = sum_h w_h log(offset + int (b_h - beta_h) dt)``.

    Concave and nondecreasing; it depends on each commodity only through its
    consumption integral, so maximizers are generally not unique in time.
    """

    weights: np.ndarray
    offset: float
    kind = "concave"
    name = "shifted_log"

    def _level(self, b, beta, dt):
        return self.offset + dt * (np.asarray(b) - beta).sum(axis=0)

    def value(self, b, beta, dt):
        lev = self._level(b, beta, dt)
        if np.any(lev <= 0):
            return -np.inf
        return float(np.dot(self.weights, np.log(lev)))

    def gradient(self, b, beta, dt):
        lev = self._level(b, beta, dt)
        return np.broadcast_to(self.weights / lev, np.shape(b)).copy()

    def maximize(self, fs: BudgetSet, beta, dt):
        """Exact maximizer over a budget set by water-filling.

        Each commodity is bought in order of increasing price; the budget
        multiplier is found by a scalar root solve.
        """
        lb, ub, price = fs.lower, fs.upper, fs.price
        m, l = lb.shape
        base = self.offset + dt * (lb - beta).sum(axis=0)
        room = dt * (ub - lb).sum(axis=0)
        if fs.caps is not None:
            room = np.minimum(room, fs.caps - dt * lb.sum(axis=0))
        if np.any(room < -FEAS_TOL):
            raise InfeasibleError("integral caps lie below the consumption lower bounds")
        room = np.maximum(room, 0.0)
        budget = fs.wealth - fs.cost(lb)
        if budget < -FEAS_TOL * max(1.0, abs(fs.wealth)):
            raise InfeasibleError(f"budget {fs.wealth:.6g} cannot cover the lower bounds")
        budget = max(budget, 0.0)

        order = np.argsort(price, axis=0, kind="stable")
        seg_price = np.take_along_axis(price, order, axis=0)
        seg_len = dt * np.take_along_axis(ub - lb, order, axis=0)
        end = np.cumsum(seg_len, axis=0)
        start = end - seg_len

        def extra(mu):
            if mu == 0:
                return room.copy()
            with np.errstate(divide="ignore"):
                target = np.where(seg_price > 0, self.weights / (mu * np.where(seg_price > 0, seg_price, 1.0)),
                                  np.inf) - base
            # segments are entered while marginal utility beats mu * price; they form a prefix
            reach = np.where(target >= start, np.minimum(target, end), 0.0).max(axis=0)
            return np.minimum(np.maximum(reach, 0.0), room)

        def spent(mu):
            fill = np.clip(extra(mu) - start, 0.0, seg_len)
            return float((seg_price * fill).sum())

        if spent(0.0) <= budget:
            amount = extra(0.0)
        else:
            pos = seg_price[seg_price > 0]
            mu_hi = float(np.max(self.weights / base)) / float(pos.min()) * (1 + 1e-9)
            mu = brentq(lambda t: spent(t) - budget, 0.0, mu_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                        maxiter=500)
            amount = extra(mu)
        fill = np.clip(amount - start, 0.0, seg_len) / dt
        y = lb.copy()
        np.put_along_axis(y, order, np.take_along_axis(lb, order, axis=0) + fill, axis=0)
        return np.minimum(y, ub)


@dataclass(frozen=True, eq=False)
class QuadraticUtility:
    """``u(b) = -scale * <<b - target, b - target>>``; satiated at ``target``."""

    target: np.ndarray
    scale: float = 1.0
    kind = "concave"
    name = "quadratic"

    def value(self, b, beta, dt):
        d = np.asarray(b) - self.target
        return float(-self.scale * dt * np.vdot(d, d))

    def gradient(self, b, beta, dt):
        return -2.0 * self.scale * (np.asarray(b) - self.target)

    def maximize(self, fs: FeasibleSet, beta, dt):
        return fs.project(np.broadcast_to(self.target, fs.shape))


Utility = LinearUtility | ShiftedLogUtility | QuadraticUtility


# ---------------------------------------------------------------------- model


@dataclass(frozen=True, eq=False)
class ProductionSet:
    lower: np.ndarray
    upper: np.ndarray
    cuts: tuple = ()

    def as_set(self, dt: float) -> FeasibleSet:
        if self.cuts:
            return Polytope(self.lower, self.upper, dt, self.cuts)
        return Box(self.lower, self.upper, dt)

    def max_abs(self) -> np.ndarray:
        return np.maximum(np.abs(self.lower), np.abs(self.upper))


@dataclass(frozen=True, eq=False)
class Producer:
    name: str
    production: ProductionSet


@dataclass(frozen=True, eq=False)
class Consumer:
    name: str
    endowment: np.ndarray
    lower: np.ndarray
    utility: Utility
    upper: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class EconomyModel:
    grid: TimeGrid
    commodities: int
    producers: tuple
    consumers: tuple
    shares: tuple  # one row per consumer, one entry per producer
    truncate: bool = True

    @property
    def s(self) -> int:
        return len(self.producers)

    @property
    def r(self) -> int:
        return len(self.consumers)

    @property
    def l(self) -> int:
        return self.commodities

    @property
    def shape(self) -> tuple:
        return (self.grid.intervals, self.commodities)

    @property
    def alpha(self) -> np.ndarray:
        return np.array(self.shares, dtype=float).reshape(self.r, self.s)

    def consumer_lower(self, i: int) -> np.ndarray:
        beta = self.consumers[i].lower
        return np.maximum(beta, 0.0) if self.truncate else beta


def build_model(grid: TimeGrid, commodities: int, producers: Sequence[Producer], consumers: Sequence[Consumer],
                shares, truncate: bool = True) -> EconomyModel:
    """Assemble a model, broadcasting constant rows to full ``(m, l)`` trajectories."""
    shape = (grid.intervals, commodities)

    def fit(v, what):
        a = np.asarray(getattr(v, "values", v), dtype=float)
        try:
            return _frozen(a, shape)
        except ValueError:
            raise ShapeError(f"{what} of shape {a.shape} does not fit (m, l) = {shape}") from None

    prods = []
    for pr in producers:
        ps = pr.production
        cuts = tuple((fit(c, f"cut of {pr.name}"), float(r)) for c, r in ps.cuts)
        prods.append(Producer(pr.name, ProductionSet(fit(ps.lower, f"lower bound of {pr.name}"),
                                                     fit(ps.upper, f"upper bound of {pr.name}"), cuts)))
    cons = []
    for c in consumers:
        u = c.utility
        if isinstance(u, LinearUtility):
            u = LinearUtility(fit(u.weights, f"utility weights of {c.name}"))
        elif isinstance(u, QuadraticUtility):
            u = QuadraticUtility(fit(u.target, f"utility target of {c.name}"), float(u.scale))
        elif isinstance(u, ShiftedLogUtility):
            u = ShiftedLogUtility(_frozen(np.asarray(u.weights, dtype=float).reshape(-1)), float(u.offset))
        upper = None if c.upper is None else fit(c.upper, f"upper bound of {c.name}")
        cons.append(Consumer(c.name, fit(c.endowment, f"endowment of {c.name}"),
                             fit(c.lower, f"lower bound of {c.name}"), u, upper))
    rows = tuple(tuple(float(v) for v in np.atleast_1d(row)) for row in shares)
    return EconomyModel(grid, int(commodities), tuple(prods), tuple(cons), rows, bool(truncate))


# ----------------------------------------------------------------- operations


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "pass" if self.ok else "fail: " + "; ".join(self.violations)


def validate(model: EconomyModel, trials: int = 1000, seed: int = 0) -> ValidationReport:
    """Check model invariants and sample-test semistrict quasiconcavity of utilities."""
    out = []
    m, l = model.shape
    dt = model.grid.dt
    if model.r < 1:
        out.append("the economy needs at least one consumer")
    for i, row in enumerate(model.shares):
        if len(row) != model.s:
            out.append(f"shares row length ≠ s for consumer {i + 1} ({len(row)} entries, s = {model.s})")
    regular = all(len(row) == model.s for row in model.shares) and len(model.shares) == model.r
    if regular and model.s:
        alpha = model.alpha
        if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
            out.append("shares must be finite and nonnegative")
        for j, total in enumerate(alpha.sum(axis=0)):
            if abs(total - 1.0) > SHARE_TOL:
                out.append(f"shares of production unit {j + 1} do not sum to 1 (sum = {total:.12g})")
    elif len(model.shares) != model.r:
        out.append(f"{len(model.shares)} share rows for {model.r} consumers")

    for j, pr in enumerate(model.producers):
        ps = pr.production
        if not (np.all(np.isfinite(ps.lower)) and np.all(np.isfinite(ps.upper))):
            out.append(f"production bounds of unit {j + 1} must be finite")
            continue
        if np.any(ps.lower > 0) or np.any(ps.upper < 0):
            out.append(f"0 ∉ A_{j + 1}: bounds of producer {pr.name} must satisfy lower <= 0 <= upper")
        for q, (_, rhs) in enumerate(ps.cuts):
            if rhs < 0:
                out.append(f"0 ∉ A_{j + 1}: cut {q + 1} of producer {pr.name} excludes the zero plan")

    caps = None
    if not any("finite" in v for v in out):
        caps = truncated_consumption_bound(model, compute_R(model))
    for i, c in enumerate(model.consumers):
        if np.any(c.endowment < 0) or not np.all(np.isfinite(c.endowment)):
            out.append(f"endowment of consumer {i + 1} must be finite and nonnegative")
        if not np.all(np.isfinite(c.lower)):
            out.append(f"consumption lower bound of consumer {i + 1} must be finite")
            continue
        if model.truncate and np.any(c.lower < 0):
            out.append(f"consumer {i + 1} has negative lower bounds; allowed only with truncate = false")
        if c.upper is None and not model.truncate:
            out.append(f"consumer {i + 1} needs finite upper bounds when truncate = false")
        if c.upper is not None:
            if not np.all(np.isfinite(c.upper)):
                out.append(f"consumption upper bound of consumer {i + 1} must be finite")
            elif np.any(c.lower > c.upper):
                out.append(f"lower bound exceeds upper bound for consumer {i + 1}")
        out.extend(_utility_violations(i, c.utility, m, l))
    if out:
        return ValidationReport(out)

    rng = np.random.default_rng(seed)
    for i, c in enumerate(model.consumers):
        lb = model.consumer_lower(i)
        ub = consumer_upper(model, i, caps)
        beta = c.lower

        def f(b, u=c.utility, beta=beta):
            return u.value(b, beta, dt)

        def sampler(g, lb=lb, ub=ub):
            return g.uniform(lb, ub)

        res = check_semistrict(f, sampler, trials, rng)
        if not res:
            out.append(f"utility of consumer {i + 1} failed the semistrict quasiconcavity check")
    return ValidationReport(out)


def _utility_violations(i, u, m, l):
    out = []
    if isinstance(u, ShiftedLogUtility):
        if u.weights.shape != (l,):
            out.append(f"shifted-log weights of consumer {i + 1} need {l} entries")
        elif not np.all(np.isfinite(u.weights)) or np.any(u.weights <= 0):
            out.append(f"shifted-log weights of consumer {i + 1} must be finite and positive")
        if not np.isfinite(u.offset) or u.offset <= 0:
            out.append(f"shifted-log offset of consumer {i + 1} must be positive")
    elif isinstance(u, LinearUtility):
        if not np.all(np.isfinite(u.weights)):
            out.append(f"linear utility weights of consumer {i + 1} must be finite")
    elif isinstance(u, QuadraticUtility):
        if not np.all(np.isfinite(u.target)):
            out.append(f"quadratic utility target of consumer {i + 1} must be finite")
        if not np.isfinite(u.scale) or u.scale <= 0:
            out.append(f"quadratic utility scale of consumer {i + 1} must be positive")
    else:
        out.append(f"consumer {i + 1} has an unsupported utility {type(u).__name__}")
    return out


def compute_R(model: EconomyModel) -> float:
    """Margin strictly above ``|int sum_j a_h^j|`` for every feasible production profile."""
    if model.s == 0:
        return 1.0
    dt = model.grid.dt
    per_h = sum(dt * pr.production.max_abs().sum(axis=0) for pr in model.producers)
    return float(1.0 + np.max(per_h))


def truncated_consumption_bound(model: EconomyModel, R: float) -> np.ndarray:
    """Integral caps ``C_h = int sum_i xi_h^i + R`` of the truncation set."""
    total = sum(c.endowment for c in model.consumers) if model.r else np.zeros(model.shape)
    return model.grid.dt * np.asarray(total).sum(axis=0) + R


def consumer_upper(model: EconomyModel, i: int, caps=None) -> np.ndarray:
    """Per-interval upper bounds of consumer ``i``; the cap-implied ones when truncating."""
    c = model.consumers[i]
    if model.truncate:
        if caps is None:
            caps = truncated_consumption_bound(model, compute_R(model))
        implied = np.broadcast_to(np.asarray(caps) / model.grid.dt, model.shape)
        return implied.copy() if c.upper is None else np.minimum(c.upper, implied)
    if c.upper is None:
        raise ValueError(f"consumer {i + 1} needs upper bounds when truncate = false")
    return np.array(c.upper)


def in_truncation(model: EconomyModel, b, caps, tol: float = FEAS_TOL) -> bool:
    b = _arr(b)
    return bool(np.all(b >= -tol) and np.all(model.grid.dt * b.sum(axis=0) <= caps + tol * np.maximum(1, caps)))


def budget_rhs(model: EconomyModel, i: int, a: Sequence, p) -> float:
    """``<<p, xi^i>> + max(0, sum_j alpha_ij <<p, a^j>>)``."""
    p = _arr(p)
    dt = model.grid.dt
    if p.shape != model.shape:
        raise ShapeError(f"price of shape {p.shape} does not fit {model.shape}")
    if len(a) != model.s:
        raise ShapeError(f"expected {model.s} production plans, got {len(a)}")
    profit = 0.0
    for j, aj in enumerate(a):
        aj = _arr(aj)
        if aj.shape != model.shape:
            raise ShapeError(f"production plan {j + 1} of shape {aj.shape} does not fit {model.shape}")
        profit += model.shares[i][j] * dt * np.vdot(p, aj)
    return float(dt * np.vdot(p, model.consumers[i].endowment) + max(0.0, profit))


def price_set(grid: TimeGrid, commodities: int) -> ScaledSimplex:
    return ScaledSimplex((grid.intervals, commodities), grid.dt, grid.horizon)


def project_prices(q: Trajectory) -> Trajectory:
    """Nearest point of the price set in the L2 norm."""
    return Trajectory(q.grid, price_set(q.grid, q.dim).project(q.values))


def consumer_set(model: EconomyModel, i: int, a: Sequence, p, R: float | None = None) -> BudgetSet:
    """``D_i(a, p)`` intersected with the truncation set when enabled."""
    R = compute_R(model) if R is None else R
    caps = truncated_consumption_bound(model, R) if model.truncate else None
    return BudgetSet(model.consumer_lower(i), consumer_upper(model, i, caps), _arr(p),
                     budget_rhs(model, i, a, p), model.grid.dt, caps)


def excess_demand(model: EconomyModel, a: Sequence, b: Sequence) -> Trajectory:
    """``z = sum_i (b^i - xi^i) - sum_j a^j``."""
    if len(a) != model.s or len(b) != model.r:
        raise ShapeError(f"expected {model.s} plans and {model.r} consumptions, got {len(a)} and {len(b)}")
    z = np.zeros(model.shape)
    for bi, c in zip(b, model.consumers):
        bi = _arr(bi)
        if bi.shape != model.shape:
            raise ShapeError(f"consumption of shape {bi.shape} does not fit {model.shape}")
        z += bi - c.endowment
    for aj in a:
        aj = _arr(aj)
        if aj.shape != model.shape:
            raise ShapeError(f"production plan of shape {aj.shape} does not fit {model.shape}")
        z -= aj
    return Trajectory(model.grid, z)


# ------------------------------------------------------------- GNEP embedding


class EconomyGame(GnepInstance):
    """The economy as an ``(s + r + 1)``-player GNEP on the model's grid."""

    def __init__(self, model: EconomyModel, R: float | None = None):
        self.model = model
        self.R = compute_R(model) if R is None else float(R)
        if self.R <= 0:
            raise ValueError("R must be positive")
        self.caps = truncated_consumption_bound(model, self.R) if model.truncate else None
        s, r = model.s, model.r
        self.price_index = s + r
        grid, shape, dt = model.grid, model.shape, model.grid.dt
        pidx = self.price_index
        players = []
        for j, pr in enumerate(model.producers):
            players.append(Player(
                name=pr.name, dim=model.l,
                objective=LinearObjective(lambda x, pidx=pidx: x.blocks[pidx].values),
                feasible=pr.production.as_set(dt),
                ambient=Box(pr.production.lower, pr.production.upper, dt),
            ))
        for i, c in enumerate(model.consumers):
            players.append(Player(
                name=c.name, dim=model.l,
                objective=self._consumer_objective(i),
                feasible=lambda x, i=i: self.consumer_set(i, x),
                ambient=Box(model.consumer_lower(i), consumer_upper(model, i, self.caps), dt),
                rival_dependent=True,
            ))
        players.append(Player(
            name="price", dim=model.l,
            objective=LinearObjective(lambda x: self.excess(x)),
            feasible=price_set(grid, model.l),
            ambient=Box(np.zeros(shape), np.full(shape, grid.horizon / dt), dt),
        ))
        super().__init__(grid, players)

    def _consumer_objective(self, i):
        c = self.model.consumers[i]
        u, beta, dt, nu = c.utility, c.lower, self.model.grid.dt, self.model.s + i
        if u.kind == "linear":
            return LinearObjective(lambda x: u.weights)
        return ConcaveObjective(
            value_fn=lambda x: u.value(x.blocks[nu].values, beta, dt),
            gradient_fn=lambda x: u.gradient(x.blocks[nu].values, beta, dt),
            maximizer=lambda x, fs: u.maximize(fs, beta, dt),
        )

    def unpack(self, x: StrategyProfile):
        """``x -> (a, b, p)`` as lists of arrays and the price array."""
        arrs = x.arrays()
        s, r = self.model.s, self.model.r
        return arrs[:s], arrs[s:s + r], arrs[s + r]

    def pack(self, a, b, p) -> StrategyProfile:
        return StrategyProfile(self.grid, [_arr(v) for v in list(a) + list(b) + [p]])

    def excess(self, x: StrategyProfile) -> np.ndarray:
        a, b, _ = self.unpack(x)
        return excess_demand(self.model, a, b).values

    def consumer_set(self, i: int, x: StrategyProfile) -> BudgetSet:
        a, _, p = self.unpack(x)
        return BudgetSet(self.model.consumer_lower(i), self.players[self.model.s + i].ambient.upper, p,
                         budget_rhs(self.model, i, a, p), self.model.grid.dt, self.caps)

    def initial_profile(self) -> StrategyProfile:
        """Zero production, consumption at the (clipped) endowment, uniform prices."""
        m = self.model
        a = [np.clip(0.0, pr.production.lower, pr.production.upper) for pr in m.producers]
        b = [np.clip(c.endowment, self.players[m.s + i].ambient.lower, self.players[m.s + i].ambient.upper)
             for i, c in enumerate(m.consumers)]
        p = np.full(m.shape, 1.0 / m.l)
        return self.pack(a, b, p)


def to_gnep(model: EconomyModel, R: float | None = None, check: bool = True, seed: int = 0) -> EconomyGame:
    """Build the GNEP; refuses models that fail :func:`validate`."""
    if check:
        report = validate(model, seed=seed)
        if not report:
            raise ValueError(f"economy model failed validation: {report}")
    return EconomyGame(model, R)
