"""Piecewise-constant surrogate of L2([0, T], R^d).

A trajectory is stored as an ``(m, d)`` array holding its value on each of the
``m`` uniform intervals of ``[0, T]``.  The L2 pairing of two such functions is
exact: ``dt * sum(phi * psi)``.  Analytic integrands are brought onto the grid
by sampling at interval midpoints ``t_k = (k + 1/2) dt``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    intervals: int

    def __post_init__(self):
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if int(self.intervals) != self.intervals or self.intervals < 1:
            raise ValueError(f"intervals must be a positive integer, got {self.intervals!r}")

    @property
    def dt(self) -> float:
        return self.horizon / self.intervals

    @property
    def nodes(self) -> np.ndarray:
        """Midpoints of the grid intervals."""
        return (np.arange(self.intervals) + 0.5) * self.dt

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.intervals * factor)


def make_grid(horizon: float, intervals: int) -> TimeGrid:
    return TimeGrid(horizon, intervals)


class Trajectory:
    """Immutable piecewise-constant function on a :class:`TimeGrid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: TimeGrid, values):
        arr = np.array(values, dtype=float)
        if arr.ndim == 1 and arr.size == grid.intervals:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] != grid.intervals or arr.shape[1] < 1:
            raise ValueError(
                f"values of shape {np.shape(values)} do not fit a grid with {grid.intervals} intervals"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("trajectory values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Trajectory is immutable")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def constant(cls, grid: TimeGrid, value, dim: int | None = None) -> "Trajectory":
        row = np.atleast_1d(np.asarray(value, dtype=float))
        if dim is not None and row.size == 1:
            row = np.repeat(row, dim)
        return cls(grid, np.tile(row, (grid.intervals, 1)))

    @classmethod
    def zeros(cls, grid: TimeGrid, dim: int) -> "Trajectory":
        return cls(grid, np.zeros((grid.intervals, dim)))

    @classmethod
    def sample(cls, grid: TimeGrid, f: Callable[[float], object]) -> "Trajectory":
        """Midpoint samples of ``f``; ``f(t)`` returns a scalar or a length-d vector."""
        return cls(grid, np.array([np.atleast_1d(f(t)) for t in grid.nodes], dtype=float))

    def compatible(self, other: "Trajectory") -> bool:
        return self.grid == other.grid and self.dim == other.dim

    def _check(self, other: "Trajectory"):
        if not isinstance(other, Trajectory):
            raise TypeError(f"expected a Trajectory, got {type(other).__name__}")
        if self.grid != other.grid:
            raise ShapeError(f"grid mismatch: {self.grid} vs {other.grid}")
        if self.dim != other.dim:
            raise ShapeError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.grid, self.values + other.values)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Trajectory":
        return Trajectory(self.grid, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "Trajectory":
        return Trajectory(self.grid, -self.values)

    def __eq__(self, other):
        return (
            isinstance(other, Trajectory)
            and self.compatible(other)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.grid, self.values.tobytes()))

    def __repr__(self):
        return f"Trajectory(grid={self.grid}, dim={self.dim})"

    def integral(self) -> np.ndarray:
        """Per-coordinate integral over [0, T]."""
        return self.grid.dt * self.values.sum(axis=0)


def inner_product(phi: Trajectory, psi: Trajectory) -> float:
    phi._check(psi)
    return float(phi.grid.dt * np.vdot(phi.values, psi.values))


def norm(phi: Trajectory) -> float:
    return float(np.sqrt(phi.grid.dt * np.vdot(phi.values, phi.values)))


def combine(lam: float, x: Trajectory, y: Trajectory) -> Trajectory:
    """``lam * x + (1 - lam) * y``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"combination weight must lie in [0, 1], got {lam!r}")
    x._check(y)
    if lam == 1.0:
        return x
    if lam == 0.0:
        return y
    # y + lam (x - y) returns y bit-for-bit when x == y
    return Trajectory(x.grid, y.values + lam * (x.values - y.values))
