"""Convex feasible sets for piecewise-constant strategies.

Every set acts on raw ``(m, d)`` arrays.  Distances use the dt-weighted L2
norm; on a uniform grid that gives the same projections as the plain
Euclidean norm, so dt only enters through linear constraints.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq, linprog

from .errors import InfeasibleError, ShapeError

FEAS_TOL = 1e-9

_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _as_array(v, shape=None) -> np.ndarray:
    arr = np.array(getattr(v, "values", v), dtype=float)
    if shape is not None:
        arr = np.broadcast_to(arr, shape).copy()
    arr.flags.writeable = False
    return arr


class FeasibleSet:
    """Interface: a closed convex set contained in the box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray
    dt: float

    @property
    def shape(self):
        return self.lower.shape

    def violation(self, y, tol=FEAS_TOL):
        """``None`` if ``y`` is a member, else ``(constraint name, excess)``."""
        raise NotImplementedError

    def contains(self, y, tol=FEAS_TOL) -> bool:
        return self.violation(y, tol) is None

    def project(self, q) -> np.ndarray:
        raise NotImplementedError

    def linear_max(self, c) -> np.ndarray:
        """A maximizer of ``<<c, y>>`` over the set."""
        raise NotImplementedError

    def is_empty(self) -> bool:
        raise NotImplementedError

    def _check_shape(self, y):
        y = np.asarray(getattr(y, "values", y), dtype=float)
        if y.shape != self.shape:
            raise ShapeError(f"expected shape {self.shape}, got {y.shape}")
        return y

    def _box_violation(self, y, tol):
        below = float(np.max(self.lower - y))
        if below > tol:
            return ("lower bound", below)
        above = float(np.max(y - self.upper))
        if above > tol:
            return ("upper bound", above)
        return None


class Box(FeasibleSet):
    def __init__(self, lower, upper, dt: float):
        self.lower = _as_array(lower)
        self.upper = _as_array(upper, self.lower.shape)
        self.dt = float(dt)
        if self.lower.ndim != 2:
            raise ShapeError(f"box bounds must be (m, d) arrays, got shape {self.lower.shape}")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("box bounds must be finite")

    def __repr__(self):
        return f"Box(shape={self.shape})"

    def violation(self, y, tol=FEAS_TOL):
        return self._box_violation(self._check_shape(y), tol)

    def project(self, q):
        return np.clip(self._check_shape(q), self.lower, self.upper)

    def linear_max(self, c):
        c = self._check_shape(c)
        # zero coefficient: stay at the point of the box closest to 0
        rest = np.clip(0.0, self.lower, self.upper)
        return np.where(c > 0, self.upper, np.where(c < 0, self.lower, rest))

    def is_empty(self):
        return bool(np.any(self.lower > self.upper))

    def center(self):
        return 0.5 * (self.lower + self.upper)


def simplex_projection(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x >= 0, sum(x) = total}``."""
    flat = v.ravel()
    u = np.sort(flat)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, flat.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(flat - theta, 0.0).reshape(v.shape)


class ScaledSimplex(FeasibleSet):
    """Nonnegative trajectories with unit mean integral of the coordinate sum."""

    def __init__(self, shape, dt: float, horizon: float):
        self.dt = float(dt)
        self.horizon = float(horizon)
        self.lower = _as_array(np.zeros(shape))
        self.upper = _as_array(np.full(shape, self.mass))

    @property
    def mass(self) -> float:
        """Sum of all entries of every member (``T / dt``)."""
        return self.horizon / self.dt

    def __repr__(self):
        return f"ScaledSimplex(shape={self.shape})"

    def normalization(self, y) -> float:
        return float(self.dt / self.horizon * np.sum(y))

    def violation(self, y, tol=FEAS_TOL):
        y = self._check_shape(y)
        neg = float(-np.min(y))
        if neg > tol:
            return ("nonnegativity", neg)
        off = abs(self.normalization(y) - 1.0)
        if off > tol:
            return ("normalization", off)
        return None

    def project(self, q):
        return simplex_projection(self._check_shape(q), self.mass)

    def vertex(self, k: int, h: int) -> np.ndarray:
        y = np.zeros(self.shape)
        y[k, h] = self.mass
        return y

    def linear_max(self, c):
        c = self._check_shape(c)
        # column-major order breaks ties by smallest commodity, then earliest interval
        idx = int(np.argmax(c.ravel(order="F")))
        h, k = divmod(idx, self.shape[0])
        return self.vertex(k, h)

    def is_empty(self):
        return False


class BudgetSet(FeasibleSet):
    """Box with one budget halfspace and optional per-coordinate integral caps.

    Members satisfy ``lower <= y <= upper``, ``<<price, y>> <= wealth`` and
    ``dt * sum_k y[k, h] <= caps[h]``.
    """

    def __init__(self, lower, upper, price, wealth: float, dt: float, caps=None):
        self.lower = _as_array(lower)
        self.upper = _as_array(upper, self.lower.shape)
        self.price = _as_array(price, self.lower.shape)
        self.wealth = float(wealth)
        self.dt = float(dt)
        self.caps = None if caps is None else _as_array(caps, (self.lower.shape[1],))

    def __repr__(self):
        return f"BudgetSet(shape={self.shape}, wealth={self.wealth:.6g})"

    def cost(self, y) -> float:
        return float(self.dt * np.vdot(self.price, y))

    def cap_slack(self, y) -> np.ndarray:
        if self.caps is None:
            return np.full(self.shape[1], np.inf)
        return self.caps - self.dt * np.asarray(y).sum(axis=0)

    def violation(self, y, tol=FEAS_TOL):
        y = self._check_shape(y)
        box = self._box_violation(y, tol)
        if box is not None:
            return box
        excess = self.cost(y) - self.wealth
        if excess > tol * max(1.0, abs(self.wealth)):
            return ("budget", excess)
        if self.caps is not None:
            slack = self.cap_slack(y)
            h = int(np.argmin(slack))
            if -slack[h] > tol * max(1.0, abs(self.caps[h])):
                return (f"cap[{h}]", float(-slack[h]))
        return None

    def is_empty(self):
        if np.any(self.lower > self.upper):
            return True
        if self.cost(self.lower) > self.wealth + FEAS_TOL * max(1.0, abs(self.wealth)):
            return True
        if self.caps is not None and np.any(self.cap_slack(self.lower) < -FEAS_TOL):
            return True
        return False

    def _capped(self, v):
        y = np.clip(v, self.lower, self.upper)
        if self.caps is None:
            return y
        for h in range(self.shape[1]):
            if self.dt * y[:, h].sum() > self.caps[h]:
                nu = _threshold(v[:, h], self.lower[:, h], self.upper[:, h], self.caps[h], self.dt)
                y[:, h] = np.clip(v[:, h] - nu, self.lower[:, h], self.upper[:, h])
        return y

    def project(self, q):
        q = self._check_shape(q)
        if self.is_empty():
            raise InfeasibleError("cannot project onto an empty budget set")
        y0 = self._capped(q)
        if self.cost(y0) <= self.wealth:
            return y0
        pos = self.price > 0
        # at mu_hi every priced cell sits on its lower bound
        mu_hi = float(np.max((q[pos] - self.lower[pos]) / self.price[pos])) + 1.0

        def excess(mu):
            return self.cost(self._capped(q - mu * self.price)) - self.wealth

        if excess(mu_hi) > 0:
            return self._capped(q - mu_hi * self.price)
        mu = brentq(excess, 0.0, mu_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        return self._capped(q - mu * self.price)

    def linear_max(self, c):
        c = self._check_shape(c)
        rows = [self.dt * self.price.ravel()]
        rhs = [self.wealth]
        if self.caps is not None:
            m, d = self.shape
            for h in range(d):
                row = np.zeros((m, d))
                row[:, h] = self.dt
                rows.append(row.ravel())
                rhs.append(self.caps[h])
        return _lp_max(c, self.lower, self.upper, np.array(rows), np.array(rhs), self.dt)


class Polytope(FeasibleSet):
    """Box intersected with affine cuts ``<<coef_q, y>> <= rhs_q``."""

    def __init__(self, lower, upper, dt: float, cuts=()):
        self.lower = _as_array(lower)
        self.upper = _as_array(upper, self.lower.shape)
        self.dt = float(dt)
        self.cuts = tuple((_as_array(c, self.lower.shape), float(r)) for c, r in cuts)

    def __repr__(self):
        return f"Polytope(shape={self.shape}, cuts={len(self.cuts)})"

    def violation(self, y, tol=FEAS_TOL):
        y = self._check_shape(y)
        box = self._box_violation(y, tol)
        if box is not None:
            return box
        for q, (coef, rhs) in enumerate(self.cuts):
            excess = self.dt * np.vdot(coef, y) - rhs
            if excess > tol * max(1.0, abs(rhs)):
                return (f"cut[{q}]", float(excess))
        return None

    def is_empty(self):
        if np.any(self.lower > self.upper):
            return True
        if not self.cuts:
            return False
        try:
            self.linear_max(np.zeros(self.shape))
        except InfeasibleError:
            return True
        return False

    def project(self, q, max_iter: int = 100_000):
        q = self._check_shape(q)
        box = np.clip(q, self.lower, self.upper)
        if not self.cuts or self.contains(box, tol=0.0):
            return box
        if len(self.cuts) == 1:
            return self._project_one_cut(q, *self.cuts[0])
        # Dykstra's alternating projections; the box comes last so iterates stay in it
        projs = [self._halfspace(c, r) for c, r in self.cuts]
        projs.append(lambda u: np.clip(u, self.lower, self.upper))
        x = q.copy()
        incr = [np.zeros_like(q) for _ in projs]
        for _ in range(max_iter):
            moved = 0.0
            for i, proj in enumerate(projs):
                y = proj(x + incr[i])
                new = x + incr[i] - y
                moved = max(moved, float(np.max(np.abs(y - x))), float(np.max(np.abs(new - incr[i]))))
                incr[i], x = new, y
            if moved <= 1e-15 * (1.0 + np.max(np.abs(x))):
                break
        return x

    def _project_one_cut(self, q, coef, rhs):
        """Exact projection: ``y = clip(q - mu * coef)`` with ``mu`` a root of a piecewise-linear map."""
        lb, ub, dt = self.lower, self.upper, self.dt
        nz = coef != 0
        bps = np.concatenate([((q - lb) / np.where(nz, coef, 1.0))[nz], ((q - ub) / np.where(nz, coef, 1.0))[nz]])
        bps = np.unique(bps[bps > 0])
        load = lambda mu: dt * np.vdot(coef, np.clip(q - mu * coef, lb, ub)) - rhs
        vals = np.array([load(b) for b in bps])
        ok = np.nonzero(vals <= 0)[0]
        if not ok.size:
            raise InfeasibleError("cut cannot be met inside the box")
        i = int(ok[0])
        x0, f0 = (0.0, load(0.0)) if i == 0 else (bps[i - 1], vals[i - 1])
        x1, f1 = bps[i], vals[i]
        mu = x1 if f0 == f1 else x0 + f0 * (x1 - x0) / (f0 - f1)
        return np.clip(q - mu * coef, lb, ub)

    def _halfspace(self, coef, rhs):
        nrm = self.dt * np.vdot(coef, coef)

        def proj(u):
            excess = self.dt * np.vdot(coef, u) - rhs
            if excess <= 0 or nrm == 0:
                return u
            return u - (excess / nrm) * coef

        return proj

    def linear_max(self, c):
        c = self._check_shape(c)
        if not self.cuts:
            return Box(self.lower, self.upper, self.dt).linear_max(c)
        rows = np.array([self.dt * coef.ravel() for coef, _ in self.cuts])
        rhs = np.array([r for _, r in self.cuts])
        return _lp_max(c, self.lower, self.upper, rows, rhs, self.dt)


def _threshold(v, lb, ub, target, dt) -> float:
    """Smallest ``nu >= 0`` with ``dt * sum(clip(v - nu, lb, ub)) <= target``.

    The left side is piecewise linear in ``nu``, so the root is found exactly
    between consecutive breakpoints.
    """
    f0 = dt * np.clip(v, lb, ub).sum()
    if f0 <= target:
        return 0.0
    bps = np.unique(np.concatenate([v - ub, v - lb]))
    bps = bps[bps > 0]
    vals = dt * np.clip(v[None, :] - bps[:, None], lb, ub).sum(axis=1)
    i = int(np.argmax(vals <= target))
    if vals[i] > target:
        raise InfeasibleError("integral cap below the lower bounds")
    x0, f_x0 = (0.0, f0) if i == 0 else (bps[i - 1], vals[i - 1])
    x1, f_x1 = bps[i], vals[i]
    if f_x0 == f_x1:
        return float(x1)
    return float(x0 + (f_x0 - target) * (x1 - x0) / (f_x0 - f_x1))


def _lp_max(c, lower, upper, rows, rhs, dt) -> np.ndarray:
    res = linprog(
        -dt * c.ravel(),
        A_ub=rows,
        b_ub=rhs,
        bounds=list(zip(lower.ravel(), upper.ravel())),
        method="highs",
        options=_LP_OPTIONS,
    )
    if res.status == 2:
        raise InfeasibleError("linear program is infeasible")
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    return np.clip(res.x.reshape(lower.shape), lower, upper)
