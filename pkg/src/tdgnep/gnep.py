"""Generalized Nash games over trajectory spaces.

Players are indexed from 0.  Player ``nu`` controls block ``x^nu`` of a
:class:`StrategyProfile`, maximizes ``theta_nu(x)`` and must pick its block
from ``X_nu(x^-nu)``, a :class:`~tdgnep.sets.FeasibleSet` that may depend on
the rivals' blocks.

The solver iterates ``x_{k+1} = lam_k * T(x_k) + (1 - lam_k) * x_k`` where the
response map ``T`` is one of

``best``
    blockwise exact best responses;
``projection``
    ``P_{X_nu(x)}(x^nu + tau * grad_nu theta_nu(x))``;
``extragradient``
    the projection step taken twice, the second time with gradients and
    rival-dependent sets evaluated at the extrapolated profile.

All three have the game's equilibria as fixed points.  The exact map can cycle
when best responses are vertices of a polytope that the equilibrium is not
(the price player of an economy is the standard example); the extragradient
map converges there.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ConvergenceError, InfeasibleError, ShapeError
from .fnspace import TimeGrid, Trajectory
from .sets import FEAS_TOL, Box, FeasibleSet

log = logging.getLogger(__name__)


class StrategyProfile:
    """Concatenated per-player trajectories ``x = (x^1, ..., x^p)``."""

    __slots__ = ("grid", "blocks")

    def __init__(self, grid: TimeGrid, blocks: Sequence):
        blocks = tuple(b if isinstance(b, Trajectory) else Trajectory(grid, b) for b in blocks)
        for b in blocks:
            if b.grid != grid:
                raise ShapeError(f"block on grid {b.grid} does not share profile grid {grid}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "blocks", blocks)

    def __setattr__(self, name, value):
        raise AttributeError("StrategyProfile is immutable")

    @property
    def dims(self) -> tuple:
        return tuple(b.dim for b in self.blocks)

    @property
    def n(self) -> int:
        return sum(self.dims)

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, nu) -> Trajectory:
        return self.blocks[nu]

    def __eq__(self, other):
        return isinstance(other, StrategyProfile) and self.grid == other.grid and self.blocks == other.blocks

    def __repr__(self):
        return f"StrategyProfile(dims={self.dims}, m={self.grid.intervals})"

    def arrays(self) -> list:
        return [b.values for b in self.blocks]

    def replace(self, nu: int, block) -> "StrategyProfile":
        blocks = list(self.blocks)
        blocks[nu] = block
        return StrategyProfile(self.grid, blocks)

    def stacked(self) -> np.ndarray:
        """The full ``(m, n)`` strategy vector ``x(t)``."""
        return np.hstack(self.arrays())


def split(x: StrategyProfile, nu: int):
    """``x -> (x^nu, x^-nu)``; the rivals keep their relative order."""
    if not 0 <= nu < len(x):
        raise IndexError(f"player index {nu} out of range for {len(x)} players")
    rivals = StrategyProfile(x.grid, x.blocks[:nu] + x.blocks[nu + 1:])
    return x.blocks[nu], rivals


def merge(nu: int, own, rivals: StrategyProfile) -> StrategyProfile:
    """Inverse of :func:`split`."""
    if not 0 <= nu <= len(rivals):
        raise IndexError(f"cannot insert player {nu} among {len(rivals)} rivals")
    own = own if isinstance(own, Trajectory) else Trajectory(rivals.grid, own)
    return StrategyProfile(rivals.grid, rivals.blocks[:nu] + (own,) + rivals.blocks[nu:])


def profile_norm(x: StrategyProfile) -> float:
    return float(np.sqrt(x.grid.dt * sum(np.vdot(v, v) for v in x.arrays())))


def profile_distance(x: StrategyProfile, y: StrategyProfile) -> float:
    return float(np.sqrt(x.grid.dt * sum(np.sum((u - v) ** 2) for u, v in zip(x.arrays(), y.arrays()))))


# ---------------------------------------------------------------- objectives


@dataclass(frozen=True)
class LinearObjective:
    """``theta(x) = <<coef(x), x^nu>> + offset(x)``; both callables ignore ``x^nu``."""

    coef: Callable[[StrategyProfile], np.ndarray]
    offset: Callable[[StrategyProfile], float] | None = None
    kind = "linear"

    def value(self, x: StrategyProfile, nu: int) -> float:
        v = x.grid.dt * np.vdot(self.coef(x), x.blocks[nu].values)
        return float(v + (self.offset(x) if self.offset is not None else 0.0))

    def gradient(self, x: StrategyProfile, nu: int) -> np.ndarray:
        return np.asarray(self.coef(x), dtype=float)


@dataclass(frozen=True)
class ConcaveObjective:
    """Objective concave in the own block.

    ``gradient`` returns the Riesz representative of the own-block derivative,
    so ``theta(x + h e_nu) ~ theta(x) + <<gradient(x), h>>``.  ``maximizer``,
    when given, maps ``(x, feasible set)`` to an exact maximizer and replaces
    the generic projected-gradient solve.
    """

    value_fn: Callable[[StrategyProfile], float]
    gradient_fn: Callable[[StrategyProfile], np.ndarray]
    maximizer: Callable[[StrategyProfile, FeasibleSet], np.ndarray] | None = None
    kind = "concave"

    def value(self, x: StrategyProfile, nu: int) -> float:
        return float(self.value_fn(x))

    def gradient(self, x: StrategyProfile, nu: int) -> np.ndarray:
        return np.asarray(self.gradient_fn(x), dtype=float)


Objective = Union[LinearObjective, ConcaveObjective]


@dataclass(frozen=True)
class Player:
    name: str
    dim: int
    objective: Objective
    feasible: Union[FeasibleSet, Callable[[StrategyProfile], FeasibleSet]]
    ambient: Box
    rival_dependent: bool = False

    def feasible_set(self, x: StrategyProfile) -> FeasibleSet:
        return self.feasible(x) if callable(self.feasible) else self.feasible


class GnepInstance:
    """Players on a common grid with ambient boxes ``K = prod K_nu``.

    Construction checks that every ``X_nu`` is nonempty and lies inside
    ``K_nu`` at the profile of ambient-box centers.
    """

    def __init__(self, grid: TimeGrid, players: Sequence[Player]):
        self.grid = grid
        self.players = tuple(players)
        if not self.players:
            raise ValueError("a game needs at least one player")
        for nu, pl in enumerate(self.players):
            if pl.dim < 1:
                raise ValueError(f"player {nu} ({pl.name}) has nonpositive dimension")
            if pl.ambient.shape != (grid.intervals, pl.dim):
                raise ShapeError(f"ambient box of player {nu} has shape {pl.ambient.shape}")
        ref = self.ambient_center()
        for nu, pl in enumerate(self.players):
            fs = pl.feasible_set(ref)
            if fs.shape != pl.ambient.shape:
                raise ShapeError(f"feasible set of player {nu} has shape {fs.shape}")
            if fs.is_empty():
                raise InfeasibleError(f"feasible set of player {nu} ({pl.name}) is empty", player=nu)
            if np.any(fs.lower < pl.ambient.lower - FEAS_TOL) or np.any(fs.upper > pl.ambient.upper + FEAS_TOL):
                raise ValueError(f"feasible set of player {nu} ({pl.name}) leaves its ambient box")

    def __len__(self):
        return len(self.players)

    @property
    def dims(self) -> tuple:
        return tuple(pl.dim for pl in self.players)

    def ambient_center(self) -> StrategyProfile:
        return StrategyProfile(self.grid, [pl.ambient.center() for pl in self.players])

    def theta(self, nu: int, x: StrategyProfile) -> float:
        return self.players[nu].objective.value(x, nu)

    def feasible_set(self, nu: int, x: StrategyProfile) -> FeasibleSet:
        return self.players[nu].feasible_set(x)

    def check_feasible(self, x: StrategyProfile, tol: float = FEAS_TOL):
        if x.dims != self.dims or x.grid != self.grid:
            raise ShapeError(f"profile {x} does not match game with dims {self.dims}")
        for nu in range(len(self)):
            bad = self.feasible_set(nu, x).violation(x.blocks[nu].values, tol)
            if bad is not None:
                name, amount = bad
                raise InfeasibleError(
                    f"player {nu} ({self.players[nu].name}) violates {name} by {amount:.3e}", player=nu
                )

    def project_profile(self, x: StrategyProfile):
        """Blockwise projection onto feasibility; returns ``(profile, distance)``.

        Rival-independent blocks go first so rival-dependent sets see their
        projected values.
        """
        order = sorted(range(len(self)), key=lambda nu: self.players[nu].rival_dependent)
        y = x
        for nu in order:
            fs = self.feasible_set(nu, y)
            own = y.blocks[nu].values
            if not fs.contains(own, tol=0.0):
                y = y.replace(nu, fs.project(own))
        return y, profile_distance(x, y)


# ------------------------------------------------------------ best responses


def _full_profile(inst: GnepInstance, nu: int, rivals: StrategyProfile) -> StrategyProfile:
    if len(rivals) == len(inst):
        return rivals
    if len(rivals) == len(inst) - 1:
        return merge(nu, inst.players[nu].ambient.center(), rivals)
    raise ShapeError(f"profile with {len(rivals)} blocks does not fit a {len(inst)}-player game")


def best_response(inst: GnepInstance, nu: int, rivals: StrategyProfile, eps_inner: float = 1e-9,
                  max_inner: int = 20_000):
    """A maximizer of ``theta_nu(., x^-nu)`` over ``X_nu(x^-nu)`` and its value.

    ``rivals`` is either the rivals-only profile or a full profile, in which
    case the own block only seeds the iterative solver.  Linear objectives are
    maximized exactly; concave ones use the objective's exact maximizer when
    it has one, otherwise projected-gradient ascent stopped once the
    Frank-Wolfe bound ``max_{z in X} <<g, z - y>>`` is at most ``eps_inner``.
    """
    x = _full_profile(inst, nu, rivals)
    player = inst.players[nu]
    fs = player.feasible_set(x)
    if fs.is_empty():
        raise InfeasibleError(f"feasible set of player {nu} ({player.name}) is empty", player=nu)
    obj = player.objective
    if obj.kind == "linear":
        y = fs.linear_max(obj.gradient(x, nu))
    elif obj.maximizer is not None:
        y = obj.maximizer(x, fs)
    else:
        y = _projected_gradient_ascent(obj, nu, x, fs, eps_inner, max_inner)
    xy = x.replace(nu, y)
    return xy.blocks[nu], obj.value(xy, nu)


def _projected_gradient_ascent(obj, nu, x, fs, eps, max_iter):
    dt = x.grid.dt
    y = fs.project(x.blocks[nu].values)
    xy = x.replace(nu, y)
    val = obj.value(xy, nu)
    step = 1.0
    fw = np.inf
    for it in range(max_iter):
        g = obj.gradient(xy, nu)
        if it % 5 == 0:
            fw = dt * np.vdot(g, fs.linear_max(g) - y)
            if fw <= eps:
                return y
        while True:
            cand = fs.project(y + step * g)
            d = cand - y
            xc = x.replace(nu, cand)
            vc = obj.value(xc, nu)
            # sufficient-ascent test for an L-smooth concave objective with L = 1/step
            if vc >= val + dt * np.vdot(g, d) - dt * np.vdot(d, d) / (2 * step) - 1e-15 * abs(val):
                break
            step *= 0.5
            if step < 1e-14:
                raise ConvergenceError(
                    f"projected gradient ascent stalled for player {nu}", best=y, certified_gap=fw
                )
        if not np.any(d):
            fw = dt * np.vdot(g, fs.linear_max(g) - y)
            if fw <= eps:
                return y
            raise ConvergenceError(f"projected gradient ascent stalled for player {nu}", best=y, certified_gap=fw)
        y, xy, val = cand, xc, vc
        step *= 1.5
    raise ConvergenceError(
        f"projected gradient ascent for player {nu} did not reach gap {eps:g} in {max_iter} steps",
        best=y,
        certified_gap=fw,
    )


def player_gaps(inst: GnepInstance, x: StrategyProfile, eps_inner: float = 1e-9):
    """Per-player improvements ``max theta_nu(., x^-nu) - theta_nu(x)`` and best responses."""
    inst.check_feasible(x)
    gaps, responses = [], []
    for nu in range(len(inst)):
        y, v = best_response(inst, nu, x, eps_inner)
        gaps.append(max(0.0, v - inst.theta(nu, x)))
        responses.append(y)
    return np.array(gaps), responses


def ni_gap(inst: GnepInstance, x: StrategyProfile, eps_inner: float = 1e-9) -> float:
    """Nikaido-Isoda gap ``sum_nu [max theta_nu(., x^-nu) - theta_nu(x)]``.

    Zero exactly at fixed points of the best-response map; a value at most
    ``p * eps_inner`` certifies an ``eps``-equilibrium.
    """
    return float(player_gaps(inst, x, eps_inner)[0].sum())


# --------------------------------------------------------------------- solver


@dataclass(frozen=True)
class SolverSchedule:
    damping: float = 0.3
    decay: float = 0.0
    max_iters: int = 5000
    gap_tol: float = 1e-6
    inner_tol: float = 1e-9
    response: str = "best"
    step: float = 0.5
    order: str = "jacobi"

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if self.decay < 0:
            raise ValueError("decay must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.gap_tol <= 0 or self.inner_tol <= 0 or self.step <= 0:
            raise ValueError("tolerances and step must be positive")
        if self.response not in ("best", "projection", "extragradient"):
            raise ValueError(f"unknown response map {self.response!r}")
        if self.order not in ("jacobi", "gauss-seidel"):
            raise ValueError(f"unknown update order {self.order!r}")
        if self.order == "gauss-seidel" and self.response == "extragradient":
            raise ValueError("extragradient responses use the Jacobi order")

    def weight(self, k: int) -> float:
        return self.damping / (1.0 + k * self.decay)


@dataclass
class TraceRow:
    iteration: int
    gap: float
    residual: float
    projection: float


@dataclass
class SolveResult:
    profile: StrategyProfile
    gap: float
    converged: bool
    iterations: int
    trace: list = field(default_factory=list)
    initial_projection: float = 0.0

    @property
    def final_residual(self) -> float:
        rows = [r.residual for r in self.trace if np.isfinite(r.residual)]
        return rows[-1] if rows else 0.0

    @property
    def max_projection(self) -> float:
        return max([self.initial_projection] + [r.projection for r in self.trace])


def _gradient_step(inst, x, nu, tau, at=None):
    """Projection response of player ``nu``; ``at`` supplies gradient and set."""
    at = x if at is None else at
    pl = inst.players[nu]
    g = pl.objective.gradient(at, nu)
    return pl.feasible_set(at).project(x.blocks[nu].values + tau * g)


def _response(inst, x, sched, best):
    p = len(inst)
    if sched.response == "best":
        if sched.order == "jacobi":
            return [b.values for b in best]
        y = x
        for nu in range(p):
            bnu, _ = best_response(inst, nu, y, sched.inner_tol)
            y = y.replace(nu, bnu)
        return y.arrays()
    tau = sched.step
    if sched.response == "projection":
        if sched.order == "jacobi":
            return [_gradient_step(inst, x, nu, tau) for nu in range(p)]
        y = x
        for nu in range(p):
            y = y.replace(nu, _gradient_step(inst, y, nu, tau))
        return y.arrays()
    bar = StrategyProfile(x.grid, [_gradient_step(inst, x, nu, tau) for nu in range(p)])
    return [_gradient_step(inst, x, nu, tau, at=bar) for nu in range(p)]


def solve(inst: GnepInstance, x0: StrategyProfile, sched: SolverSchedule = SolverSchedule(),
          callback=None) -> SolveResult:
    """Damped fixed-point iteration on the response map.

    Returns the first iterate whose NI gap is at most ``sched.gap_tol``;
    otherwise the best-gap iterate with ``converged=False``.  Rival-dependent
    blocks are re-projected after every update and the distance is traced.
    """
    x, dist0 = inst.project_profile(x0)
    if dist0 > 0:
        log.info("initial profile projected onto feasibility (distance %.3e)", dist0)
    trace = []
    best_x, best_gap = x, np.inf
    dependent = [nu for nu, pl in enumerate(inst.players) if pl.rival_dependent]
    for k in range(sched.max_iters + 1):
        gaps, responses = player_gaps(inst, x, sched.inner_tol)
        gap = float(gaps.sum())
        if gap < best_gap:
            best_x, best_gap = x, gap
        if gap <= sched.gap_tol or k == sched.max_iters:
            trace.append(TraceRow(k, gap, np.nan, 0.0))
            break
        target = _response(inst, x, sched, responses)
        lam = sched.weight(k)
        new = StrategyProfile(x.grid, [v + lam * (t - v) for t, v in zip(target, x.arrays())])
        moved = 0.0
        for nu in dependent:
            fs = inst.feasible_set(nu, new)
            own = new.blocks[nu].values
            if not fs.contains(own, tol=0.0):
                proj = fs.project(own)
                moved = max(moved, float(np.sqrt(x.grid.dt * np.sum((proj - own) ** 2))))
                new = new.replace(nu, proj)
        row = TraceRow(k, gap, profile_distance(new, x), moved)
        trace.append(row)
        if callback is not None:
            callback(row)
        x = new
    converged = best_gap <= sched.gap_tol
    return SolveResult(best_x, best_gap, converged, trace[-1].iteration, trace, dist0)


from .convexity import check_quasiconcave, check_semistrict  # noqa: E402  (re-exported property checks)
