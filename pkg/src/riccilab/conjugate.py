"""Backward conjugate heat solver and the log-transform to the potential f.

The terminal-value problem H_t = -lap_g H + R H, H(., t1) = H0 is solved
in the substituted variable s = t1 - t as a forward heat equation with
potential -R.  The march walks the flow trajectory ladder cell by cell
with the metric frozen at the cell's s-start state; substeps obey the
shared CFL guard plus |R| dt <= 0.1.  Spheres use the exact closed form.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List

import numpy as np

from . import _kernels as K
from .flow import CFL_COEFF, FlowTrajectory, StabilityError
from .manifold import MetricState, Sphere, Torus, dim, integrate
from .curvature import scalar_curvature

__all__ = [
    "ConjugateSolution", "PositivityError", "solve_conjugate_heat",
    "positivity_floor", "H_to_f", "f_to_H", "mass", "constraint_value",
    "terminal_H_from_f", "dump_mass_series",
]

POSITIVITY_TOL = 1e-8


class PositivityError(RuntimeError):
    """Raised when H dips below the curvature-controlled lower bound."""


@dataclass(frozen=True)
class ConjugateSolution:
    """H and f = -log[(4 pi tau)^{n/2} H] aligned with a trajectory ladder."""

    H: List
    f: List
    C2: float


def _heat_substeps(g: Torus, Rmax: float, dt: float) -> int:
    gr = g.grid
    lim = CFL_COEFF * min(gr.h1, gr.h2) ** 2 * float(np.exp(2.0 * np.min(g.u)))
    if Rmax > 0:
        lim = min(lim, 0.1 / Rmax)
    m = 1
    while dt / m > lim:
        m *= 2
    return m


def terminal_H_from_f(f0, tau1: float, n: int):
    """Terminal data (4 pi tau1)^{-n/2} exp(-f0), keeping the constraint at 1."""
    return (4.0 * np.pi * tau1) ** (-n / 2.0) * np.exp(-np.asarray(f0, dtype=float))


def solve_conjugate_heat(traj: FlowTrajectory, H_final) -> ConjugateSolution:
    Kidx = traj.nsteps
    g_last = traj.states[Kidx]
    n = dim(g_last)

    if isinstance(g_last, Sphere):
        Hf = float(H_final)
        if Hf <= 0:
            raise ValueError("terminal data must be strictly positive")
        r2_1 = g_last.r ** 2
        Hs = [Hf * (r2_1 / traj.states[k].r ** 2) ** (n / 2.0)
              for k in range(Kidx + 1)]
        C2 = max(scalar_curvature(g) for g in traj.states)
        sol = ConjugateSolution(Hs, _transform(Hs, traj, n), float(C2))
        _check_floor(sol, traj)
        return sol

    H = np.ascontiguousarray(H_final, dtype=np.float64)
    if H.shape != g_last.grid.shape:
        raise ValueError("terminal data shape does not match grid")
    if np.min(H) <= 0:
        raise ValueError("terminal data must be strictly positive")

    R_all = [scalar_curvature(g) for g in traj.states]
    C2 = float(max(np.max(np.abs(R)) for R in R_all))
    minH0 = float(np.min(H))

    Hs = [None] * (Kidx + 1)
    Hs[Kidx] = H
    for k in range(Kidx, 0, -1):
        g = traj.states[k]          # metric frozen at the cell's s-start
        R = R_all[k]
        gr = g.grid
        e2u = np.exp(-2.0 * g.u)

        def rhs(v):
            return e2u * K.lap5(v, gr.h1, gr.h2) - R * v

        m = _heat_substeps(g, np.max(np.abs(R)), traj.dt)
        ds = traj.dt / m
        for _ in range(m):
            Hmid = H + 0.5 * ds * rhs(H)
            H = H + ds * rhs(Hmid)
        floor = np.exp(-C2 * (traj.time(Kidx) - traj.time(k - 1))) * minH0
        if np.min(H) < floor - POSITIVITY_TOL:
            raise PositivityError(
                f"H fell below the curvature floor at step {k - 1}: "
                f"min H = {np.min(H):.3e} < {floor:.3e}")
        Hs[k - 1] = H
    return ConjugateSolution(Hs, _transform(Hs, traj, n), C2)


def _transform(Hs, traj: FlowTrajectory, n: int):
    return [H_to_f_single(Hs[k], traj.tau(k), n) for k in range(len(Hs))]


def H_to_f_single(H, tau: float, n: int):
    return -np.log((4.0 * np.pi * tau) ** (n / 2.0) * np.asarray(H, dtype=float))


def H_to_f(sol: ConjugateSolution, traj: FlowTrajectory):
    """Time-indexed potential f = -log[(4 pi tau)^{n/2} H]."""
    n = dim(traj.states[0])
    return _transform(sol.H, traj, n)


def f_to_H(f, tau: float, n: int):
    return (4.0 * np.pi * tau) ** (-n / 2.0) * np.exp(-np.asarray(f, dtype=float))


def _check_floor(sol: ConjugateSolution, traj: FlowTrajectory):
    rep = positivity_floor(sol, traj)
    if rep["min_margin"] < -POSITIVITY_TOL:
        raise PositivityError(f"positivity floor violated: {rep['min_margin']:.3e}")


def positivity_floor(sol: ConjugateSolution, traj: FlowTrajectory) -> dict:
    """Check H(x,t) >= exp(-C2 (t1-t)) min H(t1) at every stored time."""
    t1 = traj.t_end
    minH0 = float(np.min(sol.H[-1]))
    margins = []
    for k in range(len(sol.H)):
        floor = np.exp(-sol.C2 * (t1 - traj.time(k))) * minH0
        margins.append(float(np.min(sol.H[k])) - floor)
    m = float(min(margins))
    return {"C2": sol.C2, "floor_base": minH0, "margins": margins,
            "min_margin": m, "passed": bool(m >= -POSITIVITY_TOL)}


def mass(sol: ConjugateSolution, traj: FlowTrajectory, k: int) -> float:
    """Integral of H against the time-matched volume element."""
    return integrate(sol.H[k], traj.states[k])


def constraint_value(f, g: MetricState, tau: float) -> float:
    """(4 pi tau)^{-n/2} integral of exp(-f)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    n = dim(g)
    if isinstance(g, Sphere):
        return (4.0 * np.pi * tau) ** (-n / 2.0) * integrate(np.exp(-float(f)), g)
    return (4.0 * np.pi * tau) ** (-n / 2.0) * integrate(np.exp(-np.asarray(f, dtype=float)), g)


def dump_mass_series(sol: ConjugateSolution, traj: FlowTrajectory, path):
    """CSV time series (t, mass, constraint)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mass", "constraint"])
        for k in range(len(sol.H)):
            w.writerow([repr(traj.time(k)),
                        repr(mass(sol, traj, k)),
                        repr(constraint_value(sol.f[k], traj.states[k], traj.tau(k)))])
