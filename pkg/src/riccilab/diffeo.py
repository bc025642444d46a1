"""Gradient-flow diffeomorphisms of the torus and metric pullbacks.

Integrates the frozen-time flow (autonomous velocity -grad f(., t)) and
the time-dependent flow, pulls metrics and tensors back through the
resulting maps, and measures the deviation between the two flows and the
time-derivative identity for pulled-back metrics.

Maps are stored as unwrapped absolute positions; displacement grids are
periodic, so Jacobians by centered differences are seam-safe.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from . import _kernels as K
from .curvature import hessian, ricci_tensor, scalar_curvature
from .flow import FlowTrajectory
from .interp import PeriodicInterp2D
from .manifold import SymTensor2, Torus
from .entropy import W_functional  # noqa: F401  (re-export convenience)

__all__ = [
    "DiffeoMap", "DeviationRecord", "DegenerateJacobianError",
    "integrate_frozen_flow", "integrate_flow", "pullback_metric",
    "pullback_tensor", "compose", "identity_deviation",
    "lemma13_orders", "lemma14_residual", "loglog_slope",
    "w_functional_pullback",
]


class DegenerateJacobianError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiffeoMap:
    """Grid map p -> (X(p), Y(p)) in unwrapped periodic coordinates."""

    grid: object
    X: np.ndarray
    Y: np.ndarray
    t_src: float
    t_dst: float

    def displacement(self):
        X0, Y0 = self.grid.nodes()
        return self.X - X0, self.Y - Y0

    def jacobian(self, check: bool = True):
        """Centered-difference Jacobian (J11, J12, J21, J22) = d(X,Y)/d(x,y)."""
        dx, dy = self.displacement()
        gr = self.grid
        J11 = 1.0 + K.diff_x(np.ascontiguousarray(dx), gr.h1)
        J12 = K.diff_y(np.ascontiguousarray(dx), gr.h2)
        J21 = K.diff_x(np.ascontiguousarray(dy), gr.h1)
        J22 = 1.0 + K.diff_y(np.ascontiguousarray(dy), gr.h2)
        if check:
            det = J11 * J22 - J12 * J21
            if np.min(det) <= 0:
                raise DegenerateJacobianError(
                    f"Jacobian determinant dipped to {np.min(det):.3e}")
        return J11, J12, J21, J22


@dataclass(frozen=True)
class DeviationRecord:
    """Deviation between the two flows at one step size."""

    h: float
    e_norm: float
    E_val: float
    de_dh: float
    de_dx: float


def _slice_at(traj: FlowTrajectory, fields: List, t: float):
    """Linear-in-t interpolation of a per-state field list."""
    pos = (t - traj.t0) / traj.dt
    k0 = int(np.floor(pos))
    k0 = min(max(k0, 0), len(fields) - 1)
    k1 = min(k0 + 1, len(fields) - 1)
    w = pos - k0
    if k1 == k0 or w <= 0:
        return np.asarray(fields[k0], dtype=float)
    return (1.0 - w) * np.asarray(fields[k0], dtype=float) \
        + w * np.asarray(fields[k1], dtype=float)


def _velocity_interp(traj: FlowTrajectory, f_slices: List, t: float):
    """Interpolators for v = -exp(-2u) grad f at time t."""
    g0 = traj.states[0]
    if not isinstance(g0, Torus):
        raise TypeError("diffeomorphism flows are defined on torus trajectories")
    gr = g0.grid
    u = _slice_at(traj, [s.u for s in traj.states], t)
    f = _slice_at(traj, f_slices, t)
    em2u = np.exp(-2.0 * u)
    vx = -em2u * K.diff_x(np.ascontiguousarray(f), gr.h1)
    vy = -em2u * K.diff_y(np.ascontiguousarray(f), gr.h2)
    return PeriodicInterp2D(vx, gr), PeriodicInterp2D(vy, gr)


def _rk4(X, Y, vel_at, t, ds):
    """One classical 4-stage step of the position grids."""
    vx0, vy0 = vel_at(t)
    k1x, k1y = vx0(X, Y), vy0(X, Y)
    vxm, vym = vel_at(t + 0.5 * ds)
    k2x, k2y = vxm(X + 0.5 * ds * k1x, Y + 0.5 * ds * k1y), \
        vym(X + 0.5 * ds * k1x, Y + 0.5 * ds * k1y)
    k3x, k3y = vxm(X + 0.5 * ds * k2x, Y + 0.5 * ds * k2y), \
        vym(X + 0.5 * ds * k2x, Y + 0.5 * ds * k2y)
    vx1, vy1 = vel_at(t + ds)
    k4x, k4y = vx1(X + ds * k3x, Y + ds * k3y), vy1(X + ds * k3x, Y + ds * k3y)
    Xn = X + (ds / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
    Yn = Y + (ds / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
    if not (np.all(np.isfinite(Xn)) and np.all(np.isfinite(Yn))):
        raise FloatingPointError("non-finite positions in flow integration")
    return Xn, Yn


def integrate_frozen_flow(traj: FlowTrajectory, f_slices: List, t: float,
                          s_end: float, ds: float) -> DiffeoMap:
    """Flow of the autonomous field -grad f(., t) for parameter time s_end."""
    gr = traj.states[0].grid
    ivx, ivy = _velocity_interp(traj, f_slices, t)

    def vel_at(_s):
        return ivx, ivy

    X, Y = gr.nodes()
    n = max(int(round(abs(s_end) / ds)), 1)
    step = s_end / n
    s = 0.0
    for _ in range(n):
        X, Y = _rk4(X, Y, vel_at, s, step)
        s += step
    return DiffeoMap(gr, X, Y, t, t)


def integrate_flow(traj: FlowTrajectory, f_slices: List, t0: float,
                   t_end: float, ds: float) -> DiffeoMap:
    """Non-autonomous flow map from t0 to t_end (either direction)."""
    gr = traj.states[0].grid
    cache = {}

    def vel_at(t):
        key = round(t, 15)
        if key not in cache:
            cache[key] = _velocity_interp(traj, f_slices, t)
            if len(cache) > 8:
                cache.pop(next(iter(cache)))
        return cache[key]

    X, Y = gr.nodes()
    span = t_end - t0
    if span == 0.0:
        return DiffeoMap(gr, X, Y, t0, t_end)
    n = max(int(round(abs(span) / ds)), 1)
    step = span / n
    t = t0
    for _ in range(n):
        X, Y = _rk4(X, Y, vel_at, t, step)
        t += step
    return DiffeoMap(gr, X, Y, t0, t_end)


def pullback_metric(dmap: DiffeoMap, g: Torus) -> SymTensor2:
    """Components of (phi^* g) on the nodes."""
    if dmap.grid.shape != g.grid.shape:
        raise ValueError("map and metric live on different grids")
    J11, J12, J21, J22 = dmap.jacobian()
    E = PeriodicInterp2D(np.exp(2.0 * g.u), g.grid)(dmap.X, dmap.Y)
    g11 = E * (J11 * J11 + J21 * J21)
    g12 = E * (J11 * J12 + J21 * J22)
    g22 = E * (J12 * J12 + J22 * J22)
    return SymTensor2(g11, g12, g22)


def pullback_tensor(dmap: DiffeoMap, T: SymTensor2, grid) -> SymTensor2:
    """Pullback of a symmetric 2-tensor field through the map."""
    J11, J12, J21, J22 = dmap.jacobian()
    t11 = PeriodicInterp2D(T.t11, grid)(dmap.X, dmap.Y)
    t12 = PeriodicInterp2D(T.t12, grid)(dmap.X, dmap.Y)
    t22 = PeriodicInterp2D(T.t22, grid)(dmap.X, dmap.Y)
    b11 = J11 * J11 * t11 + 2.0 * J11 * J21 * t12 + J21 * J21 * t22
    b12 = J11 * J12 * t11 + (J11 * J22 + J12 * J21) * t12 + J21 * J22 * t22
    b22 = J12 * J12 * t11 + 2.0 * J12 * J22 * t12 + J22 * J22 * t22
    return SymTensor2(b11, b12, b22)


def compose(outer: DiffeoMap, inner: DiffeoMap) -> DiffeoMap:
    """The map p -> outer(inner(p))."""
    gr = inner.grid
    dx, dy = outer.displacement()
    Dx = PeriodicInterp2D(dx, gr)(inner.X, inner.Y)
    Dy = PeriodicInterp2D(dy, gr)(inner.X, inner.Y)
    return DiffeoMap(gr, inner.X + Dx, inner.Y + Dy, inner.t_src, outer.t_dst)


def identity_deviation(dmap: DiffeoMap) -> float:
    """Max wrapped distance of the map from the identity."""
    gr = dmap.grid
    dx, dy = dmap.displacement()
    dx = (dx + 0.5 * gr.L1) % gr.L1 - 0.5 * gr.L1
    dy = (dy + 0.5 * gr.L2) % gr.L2 - 0.5 * gr.L2
    return float(max(np.max(np.abs(dx)), np.max(np.abs(dy))))


def loglog_slope(hs, vals) -> float:
    """Least-squares slope of log|val| against log h."""
    hs = np.asarray(hs, dtype=float)
    vals = np.abs(np.asarray(vals, dtype=float))
    keep = vals > 0
    if np.sum(keep) < 3:
        raise ValueError("need at least 3 nonzero points for a slope fit")
    return float(np.polyfit(np.log(hs[keep]), np.log(vals[keep]), 1)[0])


def lemma13_orders(traj: FlowTrajectory, f_slices: List, t: float,
                   p, h_list, substeps: int = 16) -> List[DeviationRecord]:
    """Deviation e(h) between the two flows and the pulled-back-metric
    deviation E(h), at grid node p, for each step size h."""
    h_list = sorted(h_list, reverse=True)
    if len(h_list) < 3:
        raise ValueError("need at least 3 step sizes")
    gr = traj.states[0].grid
    i, j = p
    g_t = Torus(gr, _slice_at(traj, [s.u for s in traj.states], t))
    records = []
    for h in h_list:
        ds = h / substeps
        phi = integrate_flow(traj, f_slices, t, t + h, ds)
        psi = integrate_frozen_flow(traj, f_slices, t, h, ds)
        ex = phi.X - psi.X
        ey = phi.Y - psi.Y
        e_norm = float(np.hypot(ex[i, j], ey[i, j]))
        # de/dh straight from the two defining ODEs at the endpoints
        vxt, vyt = _velocity_interp(traj, f_slices, t + h)
        vx0, vy0 = _velocity_interp(traj, f_slices, t)
        de_dh = float(np.hypot(
            vxt(phi.X[i, j], phi.Y[i, j]) - vx0(psi.X[i, j], psi.Y[i, j]),
            vyt(phi.X[i, j], phi.Y[i, j]) - vy0(psi.X[i, j], psi.Y[i, j])))
        de_dx = float(max(
            abs(K.diff_x(np.ascontiguousarray(ex), gr.h1)[i, j]),
            abs(K.diff_y(np.ascontiguousarray(ex), gr.h2)[i, j]),
            abs(K.diff_x(np.ascontiguousarray(ey), gr.h1)[i, j]),
            abs(K.diff_y(np.ascontiguousarray(ey), gr.h2)[i, j])))
        gb_phi = pullback_metric(phi, g_t)
        gb_psi = pullback_metric(psi, g_t)
        E_val = float(max(abs(gb_phi.t11[i, j] - gb_psi.t11[i, j]),
                          abs(gb_phi.t12[i, j] - gb_psi.t12[i, j]),
                          abs(gb_phi.t22[i, j] - gb_psi.t22[i, j])))
        records.append(DeviationRecord(h, e_norm, E_val, de_dh, de_dx))
    return records


def lemma14_residual(traj: FlowTrajectory, f_slices: List, t0: float,
                     t: float, dt_fd: float, ds: float | None = None) -> float:
    """Max-norm residual of the pullback time-derivative identity."""
    if ds is None:
        ds = traj.dt
    gr = traj.states[0].grid
    k = int(round((t - traj.t0) / traj.dt))
    kfd = int(round(dt_fd / traj.dt))
    if kfd < 1 or k - kfd < 0 or k + kfd > traj.nsteps:
        raise ValueError("t +/- dt_fd must lie on the trajectory ladder")
    g_m = traj.states[k - kfd]
    g_0 = traj.states[k]
    g_p = traj.states[k + kfd]

    map_m = integrate_flow(traj, f_slices, t0, traj.time(k - kfd), ds)
    map_0 = integrate_flow(traj, f_slices, t0, traj.time(k), ds)
    map_p = integrate_flow(traj, f_slices, t0, traj.time(k + kfd), ds)

    gb_m = pullback_metric(map_m, g_m)
    gb_p = pullback_metric(map_p, g_p)
    lhs = (gb_p - gb_m).scaled(1.0 / (2.0 * dt_fd))

    # d/dt g + L_V g = -2 Ric - 2 Hess f at time t
    f_t = np.asarray(f_slices[k], dtype=float)
    T = ricci_tensor(g_0) + hessian(g_0, f_t)
    T = T.scaled(-2.0)
    rhs = pullback_tensor(map_0, T, gr)
    return float((lhs - rhs).max_abs())


def w_functional_pullback(dmap: DiffeoMap, g: Torus, f, tau: float) -> float:
    """W evaluated on (phi^* g, f o phi): scalar curvature transported as a
    scalar, volume element from det of the pulled-back metric."""
    gr = g.grid
    gb = pullback_metric(dmap, g)
    fb = PeriodicInterp2D(np.asarray(f, dtype=float), gr)(dmap.X, dmap.Y)
    Rb = PeriodicInterp2D(scalar_curvature(g), gr)(dmap.X, dmap.Y)
    det = gb.t11 * gb.t22 - gb.t12 ** 2
    if np.min(det) <= 0:
        raise DegenerateJacobianError("pulled-back metric is degenerate")
    fx = K.diff_x(np.ascontiguousarray(fb), gr.h1)
    fy = K.diff_y(np.ascontiguousarray(fb), gr.h2)
    # inverse metric contraction of df (x) df
    grad2 = (gb.t22 * fx * fx - 2.0 * gb.t12 * fx * fy + gb.t11 * fy * fy) / det
    dV = np.sqrt(det) * gr.h1 * gr.h2
    n = 2
    pref = (4.0 * np.pi * tau) ** (-n / 2.0)
    integrand = (tau * (Rb + grad2) + fb - n) * np.exp(-fb)
    return pref * float(np.sum(integrand * dV))
