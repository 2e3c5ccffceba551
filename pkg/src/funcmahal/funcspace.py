"""Discrete stand-in for L2[0, 1]: grids, trapezoidal quadrature and projections.

Curves are plain 1-D float arrays aligned with a :class:`Grid`; a
:class:`FunctionalSample` stacks ``n`` of them row-wise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "Grid",
    "FunctionalSample",
    "make_uniform_grid",
    "trapezoid_weights",
    "as_curve",
    "l2_inner",
    "l2_norm",
    "project_coeffs",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def trapezoid_weights(points):
    """Trapezoidal quadrature weights for an increasing set of nodes."""
    t = np.asarray(points, dtype=float)
    d = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Sampling points on [0, 1] together with quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        t = _frozen(self.points)
        w = _frozen(self.weights)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a grid needs at least two points")
        if w.shape != t.shape:
            raise ValueError("weights and points must have the same length")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(w)):
            raise ValueError("grid points and weights must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if t[0] < 0 or t[-1] > 1:
            raise ValueError("grid points must lie in [0, 1]")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "points", t)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_points(cls, points) -> "Grid":
        """Grid on arbitrary increasing nodes in [0, 1] with trapezoid weights."""
        t = np.asarray(points, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a grid needs at least two points")
        return cls(t, trapezoid_weights(t))

    @property
    def size(self) -> int:
        return self.points.size

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes()))

    def truncate(self, upper: float) -> "Grid":
        """Keep the nodes ``<= upper``; weights are recomputed on [t_0, upper]."""
        keep = self.points <= upper
        if keep.sum() < 2:
            raise ValueError("truncation leaves fewer than two grid points")
        return Grid.from_points(self.points[keep])


def make_uniform_grid(p: int) -> Grid:
    """Closed equispaced grid ``t_i = (i-1)/(p-1)`` with trapezoid weights.

    >>> make_uniform_grid(3).weights
    array([0.25, 0.5 , 0.25])
    """
    if int(p) != p or p < 2:
        raise ValueError(f"grid size must be an integer >= 2, got {p!r}")
    p = int(p)
    points = np.linspace(0.0, 1.0, p)
    weights = np.full(p, 1.0 / (p - 1))
    weights[0] = weights[-1] = 0.5 / (p - 1)
    return Grid(points, weights)


def as_curve(x, grid: Grid, name: str = "curve") -> np.ndarray:
    """Validate ``x`` as a finite curve aligned with ``grid``."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size != grid.size:
        raise ValueError(
            f"{name} has shape {v.shape}, expected ({grid.size},) to match the grid"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def l2_inner(f, g, grid: Grid) -> float:
    """Quadrature inner product ``sum_i w_i f_i g_i``."""
    f = as_curve(f, grid, "f")
    g = as_curve(g, grid, "g")
    return float(np.dot(grid.weights * f, g))


def l2_norm(f, grid: Grid) -> float:
    return float(np.sqrt(max(l2_inner(f, f, grid), 0.0)))


def project_coeffs(x, basis, grid: Grid) -> np.ndarray:
    """Inner products of ``x`` with each basis curve (rows of ``basis``)."""
    x = as_curve(x, grid, "x")
    b = np.asarray(basis, dtype=float)
    if b.ndim == 1:
        b = b[None, :]
    if b.ndim != 2 or (b.shape[0] and b.shape[1] != grid.size):
        raise ValueError("basis curves are not aligned with the grid")
    if b.shape[0] == 0:
        return np.zeros(0)
    return b @ (grid.weights * x)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` curves evaluated on a shared grid, optionally labelled."""

    grid: Grid
    curves: np.ndarray
    labels: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        X = np.array(self.curves, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.grid.size:
            raise ValueError(
                f"curves have shape {X.shape}, expected (n, {self.grid.size})"
            )
        if not np.all(np.isfinite(X)):
            raise ValueError("sample contains non-finite values")
        X.setflags(write=False)
        object.__setattr__(self, "curves", X)
        if self.labels is not None:
            y = np.array(self.labels)
            if y.ndim != 1 or y.size != X.shape[0]:
                raise ValueError("labels must have one entry per curve")
            if not np.all(y == np.round(y)):
                raise ValueError("labels must be integers")
            y = y.astype(int)
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.curves.shape[0]

    def __len__(self):
        return self.n

    def subset(self, index) -> "FunctionalSample":
        index = np.asarray(index)
        labels = None if self.labels is None else self.labels[index]
        return FunctionalSample(self.grid, self.curves[index], labels)

    def by_label(self, label: int) -> "FunctionalSample":
        if self.labels is None:
            raise ValueError("sample has no labels")
        return self.subset(np.flatnonzero(self.labels == label))

    def truncate(self, upper: float) -> "FunctionalSample":
        """Restrict every curve to the grid nodes ``<= upper``."""
        keep = self.grid.points <= upper
        return FunctionalSample(self.grid.truncate(upper), self.curves[:, keep], self.labels)
