"""Discrete model manifolds: conformal torus metrics and round spheres.

Two geometry families are supported:

* a flat 2-torus with metric ``g = exp(2u) (dx^2 + dy^2)`` given by a
  conformal factor grid ``u`` on a periodic node-centered lattice, and
* a round n-sphere of radius ``r`` on which all attached scalar fields
  are spatially constant (represented by plain floats).

Everything here is an immutable value; operations are pure functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "TorusGrid", "Torus", "Sphere", "MetricState", "SymTensor2",
    "make_torus", "make_sphere", "preset_u", "load_u_csv",
    "total_volume", "integrate", "scale_metric", "dim",
    "unit_sphere_volume",
]


@dataclass(frozen=True)
class TorusGrid:
    """Periodic node-centered lattice with nodes at (i*h1, j*h2)."""

    L1: float
    L2: float
    N1: int
    N2: int

    def __post_init__(self):
        if self.L1 <= 0 or self.L2 <= 0:
            raise ValueError("side lengths must be positive")
        for N in (self.N1, self.N2):
            if N < 8 or N % 2 != 0:
                raise ValueError(f"node counts must be even and >= 8, got {N}")

    @property
    def h1(self) -> float:
        return self.L1 / self.N1

    @property
    def h2(self) -> float:
        return self.L2 / self.N2

    @property
    def shape(self):
        return (self.N1, self.N2)

    def nodes(self):
        """Meshgrid (X, Y) of node coordinates, indexed [i, j]."""
        x = np.arange(self.N1) * self.h1
        y = np.arange(self.N2) * self.h2
        return np.meshgrid(x, y, indexing="ij")


def _as_field(values, shape, name="field"):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != tuple(shape):
        raise ValueError(f"{name} shape {arr.shape} does not match grid {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Torus:
    """Conformal metric exp(2u) * (flat metric) on a TorusGrid."""

    grid: TorusGrid
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _as_field(self.u, self.grid.shape, "u"))


@dataclass(frozen=True)
class Sphere:
    """Round n-sphere of radius r; attached fields are constants."""

    n: int
    r: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("sphere dimension must be >= 2")
        if self.r <= 0:
            raise ValueError("sphere radius must be positive")


MetricState = Union[Torus, Sphere]


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric 2-tensor on a torus grid (upper triangle stored)."""

    t11: np.ndarray
    t12: np.ndarray
    t22: np.ndarray

    def __add__(self, other):
        return SymTensor2(self.t11 + other.t11, self.t12 + other.t12,
                          self.t22 + other.t22)

    def __sub__(self, other):
        return SymTensor2(self.t11 - other.t11, self.t12 - other.t12,
                          self.t22 - other.t22)

    def scaled(self, c):
        return SymTensor2(c * self.t11, c * self.t12, c * self.t22)

    def max_abs(self):
        return max(np.max(np.abs(self.t11)), np.max(np.abs(self.t12)),
                   np.max(np.abs(self.t22)))


def make_torus(L1, L2, N1, N2, u_init) -> Torus:
    grid = TorusGrid(L1, L2, N1, N2)
    return Torus(grid, u_init)


def make_sphere(n: int, r: float) -> Sphere:
    return Sphere(n, r)


def preset_u(grid: TorusGrid, name: str) -> np.ndarray:
    """Named initial conformal factors: flat, sinx:<eps>, sinxcosy:<eps>."""
    X, Y = grid.nodes()
    if name == "flat":
        return np.zeros(grid.shape)
    if name.startswith("sinx:"):
        eps = float(name.split(":", 1)[1])
        return eps * np.sin(2.0 * np.pi * X / grid.L1)
    if name.startswith("sinxcosy:"):
        eps = float(name.split(":", 1)[1])
        return eps * np.sin(2.0 * np.pi * X / grid.L1) * np.cos(2.0 * np.pi * Y / grid.L2)
    raise ValueError(f"unknown conformal-factor preset {name!r}")


def load_u_csv(path, grid: TorusGrid) -> np.ndarray:
    """Load a row-major N1 x N2 conformal factor grid from CSV."""
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64)
    arr = np.atleast_2d(arr)
    if arr.shape != grid.shape:
        raise ValueError(f"CSV grid {arr.shape} does not match {grid.shape}")
    return arr


def unit_sphere_volume(n: int) -> float:
    """Surface volume of the unit n-sphere (4*pi for n=2, 2*pi^2 for n=3)."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def dim(g: MetricState) -> int:
    return 2 if isinstance(g, Torus) else g.n


def total_volume(g: MetricState) -> float:
    if isinstance(g, Torus):
        gr = g.grid
        return float(np.sum(np.exp(2.0 * g.u))) * gr.h1 * gr.h2
    return unit_sphere_volume(g.n) * g.r ** g.n


def integrate(phi, g: MetricState) -> float:
    """Integral of a scalar field against the metric volume element."""
    if isinstance(g, Torus):
        gr = g.grid
        phi = np.asarray(phi, dtype=np.float64)
        if phi.ndim == 0:
            phi = np.full(gr.shape, float(phi))
        if phi.shape != gr.shape:
            raise ValueError(f"field shape {phi.shape} does not match grid {gr.shape}")
        return float(np.sum(phi * np.exp(2.0 * g.u))) * gr.h1 * gr.h2
    return float(phi) * total_volume(g)


def scale_metric(g: MetricState, lam: float) -> MetricState:
    """The metric lam * g: u -> u + log(lam)/2 on the torus, r -> sqrt(lam) r."""
    if lam <= 0:
        raise ValueError("metric scale factor must be positive")
    if isinstance(g, Torus):
        return Torus(g.grid, g.u + 0.5 * math.log(lam))
    return Sphere(g.n, math.sqrt(lam) * g.r)
