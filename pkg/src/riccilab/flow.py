"""Time evolution of model metrics under the 2-d/round Ricci flow.

On the torus the flow reduces to du/dt = exp(-2u) lap(u); steps are
explicit with a CFL guard and power-of-two substepping so stored states
always sit on the uniform dt ladder.  Round spheres evolve by the exact
closed form r^2(t) = r0^2 - 2(n-1) t.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List

import numpy as np

from . import _kernels as K
from .manifold import MetricState, Sphere, Torus

__all__ = [
    "FlowTrajectory", "StabilityError", "cfl_limit", "ricci_step",
    "evolve", "sphere_exact", "dump_trajectory",
]

CFL_COEFF = 0.2


class StabilityError(RuntimeError):
    """Raised when a step violates the explicit stability bound."""


def cfl_limit(g: MetricState) -> float:
    """Largest stable explicit step for the current state."""
    if isinstance(g, Sphere):
        return np.inf
    gr = g.grid
    return CFL_COEFF * min(gr.h1, gr.h2) ** 2 * float(np.exp(2.0 * np.min(g.u)))


def ricci_step(g: MetricState, dt: float) -> MetricState:
    """One flow step of size dt (two explicit half-stages on the torus)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(g, Sphere):
        r2 = g.r ** 2 - 2.0 * (g.n - 1) * dt
        if r2 <= 0:
            raise StabilityError("sphere extinction time reached")
        return Sphere(g.n, np.sqrt(r2))
    if dt > cfl_limit(g) * (1 + 1e-12):
        raise StabilityError(f"dt={dt:g} exceeds stability bound {cfl_limit(g):g}")
    gr = g.grid
    u = g.u
    for _ in range(2):
        u = u + 0.5 * dt * np.exp(-2.0 * u) * K.lap5(u, gr.h1, gr.h2)
    return Torus(gr, u)


@dataclass(frozen=True)
class FlowTrajectory:
    """Uniformly spaced metric states with the tau(t) = t0' - t schedule."""

    states: List[MetricState]
    t0: float
    dt: float
    t0_prime: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t0_prime <= self.t_end:
            raise ValueError("t0_prime must exceed the final time (tau > 0)")

    @property
    def nsteps(self) -> int:
        return len(self.states) - 1

    @property
    def t_end(self) -> float:
        return self.t0 + self.nsteps * self.dt

    def time(self, k: int) -> float:
        return self.t0 + k * self.dt

    def tau(self, k: int) -> float:
        return self.t0_prime - self.time(k)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.states))


def _substeps(g: MetricState, dt: float) -> int:
    """Smallest power-of-two substep count meeting the CFL bound."""
    m = 1
    lim = cfl_limit(g)
    while dt / m > lim:
        m *= 2
        if m > 1 << 20:
            raise StabilityError("CFL bound requires absurd substepping")
    return m


def evolve(g0: MetricState, t_end: float, dt: float, t0_prime: float) -> FlowTrajectory:
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    if t_end >= t0_prime:
        raise ValueError("t_end must be below t0_prime so tau stays positive")
    if isinstance(g0, Sphere) and t_end >= g0.r ** 2 / (2.0 * (g0.n - 1)):
        raise StabilityError("t_end reaches sphere extinction")
    nsteps = int(round(t_end / dt))
    states = [g0]
    g = g0
    for k in range(nsteps):
        if isinstance(g, Sphere):
            g = sphere_exact(g0.n, g0.r, (k + 1) * dt)
        else:
            m = _substeps(g, dt)
            for _ in range(m):
                g = ricci_step(g, dt / m)
        states.append(g)
    return FlowTrajectory(states, 0.0, dt, t0_prime)


def sphere_exact(n: int, r0: float, t: float) -> Sphere:
    """Exact shrinking round sphere at time t."""
    r2 = r0 ** 2 - 2.0 * (n - 1) * t
    if r2 <= 0:
        raise StabilityError("requested time at or past sphere extinction")
    return Sphere(n, np.sqrt(r2))


def dump_trajectory(traj: FlowTrajectory, path, u_dir=None):
    """CSV summary (step, t, tau, vol, Rmin, Rmax); optional per-state u grids."""
    from .curvature import scalar_curvature
    from .manifold import total_volume

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "tau", "vol", "Rmin", "Rmax"])
        for k, g in enumerate(traj.states):
            R = scalar_curvature(g)
            Rmin, Rmax = (float(np.min(R)), float(np.max(R))) if isinstance(g, Torus) \
                else (float(R), float(R))
            w.writerow([k, repr(traj.time(k)), repr(traj.tau(k)),
                        repr(total_volume(g)), repr(Rmin), repr(Rmax)])
            if u_dir is not None and isinstance(g, Torus):
                np.savetxt(f"{u_dir}/u_{k:06d}.csv", g.u, delimiter=",")
