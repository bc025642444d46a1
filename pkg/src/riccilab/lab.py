"""Experiment orchestration: the entropy-monotonicity pipeline, mu scans,
the shrinking-breather contradiction, and flow-map verification runs.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import conjugate, diffeo, entropy, flow
from .manifold import (MetricState, Sphere, Torus, TorusGrid, dim, make_sphere,
                       preset_u, scale_metric, total_volume)
from .curvature import scalar_curvature
from .reports import EntropyReport

__all__ = [
    "ExperimentConfig", "ConfigError", "build_metric",
    "run_flow", "run_monotonicity", "run_mu_monotonicity",
    "breather_fixed_point", "breather_contradiction",
    "bound_check_scan", "diffeo_verify",
]

MU_TOL = 1e-3  # estimator tolerance used by verdicts


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "sinx:0.1"
    L1: float = 1.0
    L2: float = 1.0
    N1: int = 64
    N2: int = 64
    dt: float = 1e-4
    t1: float = 0.05
    t0_prime: float = 0.5
    t2: float = 0.0          # second breather time (0 = unused)
    alpha: float = 0.5
    tau: tuple = ()
    delta: float = 0.1
    starts: int = 5
    max_iter: int = 5000
    tol: float = 1e-8
    mu_samples: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.t1 <= 0 or self.dt <= 0:
            raise ConfigError("t1 and dt must be positive")
        if self.t1 >= self.t0_prime:
            raise ConfigError("t1 must be below t0_prime")
        if self.tol <= 0 or self.max_iter < 1 or self.starts < 1:
            raise ConfigError("optimizer options must be positive")
        if self.mu_samples < 1:
            raise ConfigError("mu_samples must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        if "tau" in d:
            d = dict(d, tau=tuple(d["tau"]))
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tau"] = list(d["tau"])
        return d

    def mu_opts(self) -> dict:
        return {"starts": self.starts, "max_iter": self.max_iter,
                "tol": self.tol, "seed": self.seed}


def build_metric(cfg: ExperimentConfig) -> MetricState:
    if cfg.preset.startswith("sphere:"):
        parts = cfg.preset.split(":")
        try:
            n, r = int(parts[1]), float(parts[2])
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"bad sphere preset {cfg.preset!r}") from exc
        return make_sphere(n, r)
    try:
        grid = TorusGrid(cfg.L1, cfg.L2, cfg.N1, cfg.N2)
        return Torus(grid, preset_u(grid, cfg.preset))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run_flow(cfg: ExperimentConfig, t_end: float | None = None) -> flow.FlowTrajectory:
    g0 = build_metric(cfg)
    return flow.evolve(g0, t_end if t_end is not None else cfg.t1,
                       cfg.dt, cfg.t0_prime)


def _sample_indices(nsteps: int, count: int):
    """count indices evenly spread over (0, nsteps], always including the end."""
    ks = sorted({max(1, int(round(nsteps * (i + 1) / count)))
                 for i in range(count)})
    return ks


def _coupled_run(cfg: ExperimentConfig):
    """Flow + terminal mu minimization + backward conjugate solve."""
    traj = run_flow(cfg)
    g1 = traj.states[-1]
    tau1 = traj.tau(traj.nsteps)
    mres = entropy.mu_estimate(g1, tau1, **cfg.mu_opts())
    n = dim(g1)
    H0 = conjugate.terminal_H_from_f(mres.minimizer_f, tau1, n)
    sol = conjugate.solve_conjugate_heat(traj, H0)
    return traj, sol, mres


def run_monotonicity(cfg: ExperimentConfig) -> EntropyReport:
    traj, sol, mres = _coupled_run(cfg)
    K = traj.nsteps
    n = dim(traj.states[0])

    Ws, prods, masses, consts, vols, Rmins, Rmaxs = [], [], [], [], [], [], []
    for k in range(K + 1):
        g = traj.states[k]
        f = sol.f[k]
        tau = traj.tau(k)
        Ws.append(entropy.W_functional(g, f, tau))
        prods.append(entropy.entropy_production(g, f, tau))
        masses.append(conjugate.mass(sol, traj, k))
        consts.append(conjugate.constraint_value(f, g, tau))
        R = scalar_curvature(g)
        if isinstance(g, Torus):
            Rmins.append(float(np.min(R)))
            Rmaxs.append(float(np.max(R)))
        else:
            Rmins.append(float(R))
            Rmaxs.append(float(R))
        vols.append(total_volume(g))

    # cumulative entropy production by the trapezoid rule on the ladder
    E_cum = [0.0]
    for k in range(1, K + 1):
        E_cum.append(E_cum[-1] + 0.5 * traj.dt * (prods[k - 1] + prods[k]))

    mu_at = {}
    for k in _sample_indices(K, cfg.mu_samples):
        mu_at[k] = entropy.mu_estimate(traj.states[k], traj.tau(k),
                                       **cfg.mu_opts()).value

    rows = []
    for k in range(K + 1):
        rows.append({
            "t": traj.time(k), "tau": traj.tau(k), "W": Ws[k],
            "mu": mu_at.get(k, float("nan")), "E_cum": E_cum[k],
            "mass": masses[k], "constraint": consts[k],
            "vol": vols[k], "Rmin": Rmins[k], "Rmax": Rmaxs[k],
        })

    # central-difference dW/dt against the production integrand
    max_abs_err = 0.0
    max_rel_err = 0.0
    bound_ratio = 0.0
    for k in range(1, K):
        dwdt = (Ws[k + 1] - Ws[k - 1]) / (2.0 * traj.dt)
        err = abs(dwdt - prods[k])
        max_abs_err = max(max_abs_err, err)
        if abs(prods[k]) > 1e-12:
            max_rel_err = max(max_rel_err, err / abs(prods[k]))
        bound_ratio = max(bound_ratio,
                          err / max(1e-3, 0.05 * abs(prods[k])))

    w_increments = np.diff(Ws)
    ineq_violation = max((E_cum[K] - E_cum[k]) - (Ws[K] - Ws[k])
                         for k in range(K + 1))
    mass0 = masses[0]
    mass_drift = max(abs(m - mass0) for m in masses) / abs(mass0)
    const_drift = max(abs(c - consts[-1]) for c in consts) / abs(consts[-1])
    floor_rep = conjugate.positivity_floor(sol, traj)
    mus = [mu_at[k] for k in sorted(mu_at)]
    mu_incs = np.diff(mus) if len(mus) > 1 else np.array([0.0])

    verdicts = {
        "w_nondecreasing": bool(np.min(w_increments) >= -1e-10),
        "w_min_increment": float(np.min(w_increments)),
        "production_max_abs_err": max_abs_err,
        "production_max_rel_err": max_rel_err,
        "production_bound_ratio": bound_ratio,
        "integrated_inequality_violation": float(ineq_violation),
        "mass_drift": float(mass_drift),
        "constraint_drift": float(const_drift),
        "positivity_min_margin": floor_rep["min_margin"],
        "positivity_ok": floor_rep["passed"],
        "mu_terminal": mres.value,
        "mu_grad_residual": mres.grad_residual,
        "mu_samples": {str(k): mu_at[k] for k in sorted(mu_at)},
        "mu_nondecreasing": bool(np.min(mu_incs) >= -MU_TOL),
        "mu_total_increase": float(mus[-1] - mus[0]) if len(mus) > 1 else 0.0,
    }
    verdicts["passed"] = bool(
        verdicts["w_nondecreasing"] and verdicts["positivity_ok"]
        and ineq_violation <= 1e-4)
    return EntropyReport(rows, verdicts, cfg.to_dict())


def run_mu_monotonicity(cfg: ExperimentConfig) -> EntropyReport:
    """mu(g(t), t0'-t) sampled along the flow, with the conjugate-flow W
    at the same times for the infimum-property cross-check."""
    traj, sol, _ = _coupled_run(cfg)
    K = traj.nsteps
    rows = []
    mus = []
    for k in _sample_indices(K, cfg.mu_samples):
        g = traj.states[k]
        tau = traj.tau(k)
        res = entropy.mu_estimate(g, tau, **cfg.mu_opts())
        W = entropy.W_functional(g, sol.f[k], tau)
        mus.append(res.value)
        R = scalar_curvature(g)
        rows.append({
            "t": traj.time(k), "tau": tau, "W": W, "mu": res.value,
            "grad_residual": res.grad_residual,
            "starts_used": res.starts_used,
            "E_cum": float("nan"),
            "mass": conjugate.mass(sol, traj, k),
            "constraint": conjugate.constraint_value(sol.f[k], g, tau),
            "vol": total_volume(g),
            "Rmin": float(np.min(R)) if isinstance(g, Torus) else float(R),
            "Rmax": float(np.max(R)) if isinstance(g, Torus) else float(R),
        })
    incs = np.diff(mus) if len(mus) > 1 else np.array([0.0])
    below_W = max(r["mu"] - r["W"] for r in rows)
    verdicts = {
        "mu_nondecreasing": bool(np.min(incs) >= -MU_TOL),
        "mu_min_increment": float(np.min(incs)),
        "mu_total_increase": float(mus[-1] - mus[0]) if len(mus) > 1 else 0.0,
        "mu_below_W_max_excess": float(below_W),
        "passed": bool(np.min(incs) >= -MU_TOL and below_W <= MU_TOL),
    }
    return EntropyReport(rows, verdicts, cfg.to_dict())


def breather_fixed_point(alpha: float, t1: float, t2: float) -> float:
    """The tau with tau/alpha - (t2 - t1) = tau."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if t2 <= t1:
        raise ValueError("need t1 < t2")
    tau = alpha * (t2 - t1) / (1.0 - alpha)
    assert abs(tau / alpha - (t2 - t1) - tau) <= 1e-15 * max(tau, 1.0)
    return tau


def breather_contradiction(cfg: ExperimentConfig, alpha: float | None = None,
                           t1: float | None = None,
                           t2: float | None = None) -> dict:
    """Numerically contradict the shrinking-breather equality: check the
    scaling leg mu(alpha g(t1), tau) = mu(g(t1), tau/alpha) and exhibit
    mu(g(t1), tau/alpha) < mu(g(t2), tau) at the fixed-point tau."""
    alpha = cfg.alpha if alpha is None else alpha
    t1 = cfg.t1 if t1 is None else t1
    t2 = (cfg.t2 or 3.0 * t1) if t2 is None else t2
    tau = breather_fixed_point(alpha, t1, t2)

    g0 = build_metric(cfg)
    traj = flow.evolve(g0, t2, cfg.dt, max(cfg.t0_prime, t2 + tau))
    k1 = int(round(t1 / cfg.dt))
    g_t1 = traj.states[k1]
    g_t2 = traj.states[-1]

    opts = cfg.mu_opts()
    mu_scaled = entropy.mu_estimate(scale_metric(g_t1, alpha), tau, **opts)
    mu_left = entropy.mu_estimate(g_t1, tau / alpha, **opts)
    mu_right = entropy.mu_estimate(g_t2, tau, **opts)

    scaling_gap = abs(mu_scaled.value - mu_left.value)
    margin = mu_right.value - mu_left.value
    if margin > MU_TOL:
        verdict = "contradicted"
    else:
        prod = entropy.entropy_production(
            g_t1, entropy.normalize_f(g_t1, mu_left.minimizer_f
                                      if not isinstance(g_t1, Sphere)
                                      else mu_left.minimizer_f, tau / alpha),
            tau / alpha)
        verdict = ("soliton: breather equality attained"
                   if abs(margin) <= MU_TOL and prod <= 1e-8
                   else "inconclusive")
    return {
        "alpha": alpha, "t1": t1, "t2": t2, "tau": tau,
        "fixed_point_residual": abs(tau / alpha - (t2 - t1) - tau),
        "mu_alpha_g_t1": mu_scaled.value,
        "mu_g_t1_tau_over_alpha": mu_left.value,
        "mu_g_t2_tau": mu_right.value,
        "scaling_gap": scaling_gap,
        "margin": margin,
        "verdict": verdict,
        "passed": bool(verdict != "inconclusive" and scaling_gap < MU_TOL),
    }


def bound_check_scan(cfg: ExperimentConfig) -> list:
    """Eigenvalue lower-bound slack at each tau, on the mu-minimizer."""
    g = build_metric(cfg)
    taus = cfg.tau or (1.0 / (4.0 * math.pi), 0.5, 2.0)
    eig = entropy.lambda1(g)
    out = []
    for tau in taus:
        f = entropy.mu_estimate(g, tau, **cfg.mu_opts()).minimizer_f
        rep = entropy.bound_check(g, f, tau, cfg.delta, eig=eig)
        out.append(rep)
    return out


def diffeo_verify(cfg: ExperimentConfig, h_list=(1e-2, 3.16e-3, 1e-3,
                                                 3.16e-4, 1e-4)) -> dict:
    """Flow-map deviation orders and the pullback-derivative residual."""
    traj, sol, _ = _coupled_run(cfg)
    t_mid = traj.time(traj.nsteps // 2)
    gr = traj.states[0].grid
    p = (gr.N1 // 3, gr.N2 // 5)
    records = diffeo.lemma13_orders(traj, sol.f, t_mid, p, h_list)
    slope_e = diffeo.loglog_slope([r.h for r in records],
                                  [r.e_norm for r in records])
    slope_E = diffeo.loglog_slope([r.h for r in records],
                                  [r.E_val for r in records])
    t0 = traj.time(traj.nsteps // 4)
    dt_fd = 4 * traj.dt
    residual = diffeo.lemma14_residual(traj, sol.f, t0, t_mid, dt_fd)
    inv = _inverse_check(traj, sol.f, t0, t_mid)
    return {
        "records": records, "slope_e": slope_e, "slope_E": slope_E,
        "lemma14_residual": residual, "lemma14_dt": dt_fd,
        "inverse_deviation": inv,
        "passed": bool(slope_e >= 0.8 and slope_E >= 1.7 and inv < 1e-6),
    }


def _inverse_check(traj, f_slices, ta, tb, ds=1e-3):
    fwd = diffeo.integrate_flow(traj, f_slices, ta, tb, ds)
    bwd = diffeo.integrate_flow(traj, f_slices, tb, ta, ds)
    return diffeo.identity_deviation(diffeo.compose(bwd, fwd))
