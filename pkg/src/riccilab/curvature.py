"""Differential-geometric operators on the model metrics.

Torus formulas use the exact 2-d conformal expressions with one shared
set of centered second-order stencils; sphere fields are constants, so
all derivative operators vanish there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .manifold import MetricState, Sphere, SymTensor2, Torus

__all__ = [
    "ChristoffelCache", "scalar_curvature", "laplace_beltrami",
    "grad_norm_sq", "hessian", "lie_derivative", "tensor_norm_sq",
    "ricci_tensor", "metric_tensor",
]


@dataclass(frozen=True)
class ChristoffelCache:
    """First derivatives of the conformal factor (empty for spheres)."""

    u_x: np.ndarray | None = None
    u_y: np.ndarray | None = None

    @classmethod
    def from_metric(cls, g: MetricState) -> "ChristoffelCache":
        if isinstance(g, Sphere):
            return cls()
        gr = g.grid
        return cls(K.diff_x(g.u, gr.h1), K.diff_y(g.u, gr.h2))


def _check_torus_field(g: Torus, phi):
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    if phi.shape != g.grid.shape:
        raise ValueError(f"field shape {phi.shape} does not match grid {g.grid.shape}")
    return phi


def scalar_curvature(g: MetricState):
    """Scalar curvature R: -2 exp(-2u) lap(u) on the torus, n(n-1)/r^2 on S^n."""
    if isinstance(g, Sphere):
        return g.n * (g.n - 1) / g.r ** 2
    gr = g.grid
    return -2.0 * np.exp(-2.0 * g.u) * K.lap5(g.u, gr.h1, gr.h2)


def laplace_beltrami(g: MetricState, phi):
    if isinstance(g, Sphere):
        return 0.0
    phi = _check_torus_field(g, phi)
    gr = g.grid
    return np.exp(-2.0 * g.u) * K.lap5(phi, gr.h1, gr.h2)


def grad_norm_sq(g: MetricState, phi):
    """|grad phi|^2 with respect to g (centered differences)."""
    if isinstance(g, Sphere):
        return 0.0
    phi = _check_torus_field(g, phi)
    gr = g.grid
    px = K.diff_x(phi, gr.h1)
    py = K.diff_y(phi, gr.h2)
    return np.exp(-2.0 * g.u) * (px * px + py * py)


def hessian(g: MetricState, phi, cache: ChristoffelCache | None = None):
    """Covariant Hessian of phi as a SymTensor2 (0.0 coefficient on S^n)."""
    if isinstance(g, Sphere):
        return 0.0
    phi = _check_torus_field(g, phi)
    gr = g.grid
    if cache is None or cache.u_x is None:
        cache = ChristoffelCache.from_metric(g)
    ux, uy = cache.u_x, cache.u_y
    px = K.diff_x(phi, gr.h1)
    py = K.diff_y(phi, gr.h2)
    cross = ux * px + uy * py
    t11 = K.diff_xx(phi, gr.h1) - (2.0 * ux * px - cross)
    t22 = K.diff_yy(phi, gr.h2) - (2.0 * uy * py - cross)
    t12 = K.diff_xy(phi, gr.h1, gr.h2) - (ux * py + uy * px)
    return SymTensor2(t11, t12, t22)


def lie_derivative(g: MetricState, f, cache: ChristoffelCache | None = None):
    """L_V g for the gradient field V = -grad f; equals -2 Hess f."""
    h = hessian(g, f, cache)
    if isinstance(g, Sphere):
        return -2.0 * h
    return h.scaled(-2.0)


def metric_tensor(g: MetricState):
    """Components of g itself (coefficient 1 on the sphere)."""
    if isinstance(g, Sphere):
        return 1.0
    e2u = np.exp(2.0 * g.u)
    return SymTensor2(e2u, np.zeros_like(e2u), e2u)


def ricci_tensor(g: MetricState):
    """Ricci tensor; (R/2) g in 2-d, (n-1)/r^2 times g on S^n."""
    if isinstance(g, Sphere):
        return (g.n - 1) / g.r ** 2
    half_R = 0.5 * scalar_curvature(g)
    e2u = np.exp(2.0 * g.u)
    return SymTensor2(half_R * e2u, np.zeros_like(e2u), half_R * e2u)


def tensor_norm_sq(g: MetricState, T):
    """Full g-contraction |T|^2 = g^{ik} g^{jl} T_ij T_kl."""
    if isinstance(g, Sphere):
        # T is a coefficient c meaning T = c * g, so |T|^2 = c^2 * n.
        return float(T) ** 2 * g.n
    e4u = np.exp(-4.0 * g.u)
    return e4u * (T.t11 ** 2 + 2.0 * T.t12 ** 2 + T.t22 ** 2)
