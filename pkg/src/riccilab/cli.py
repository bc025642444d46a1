"""Command-line interface.

Exit codes: 0 all checks passed, 1 an invariant was violated,
2 bad configuration, 3 inconclusive result.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import conjugate, entropy, flow, lab
from .reports import emit_report

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_BADCONFIG = 2
EXIT_INCONCLUSIVE = 3

__all__ = ["main"]


def _build_parser():
    p = argparse.ArgumentParser(prog="rel",
                                description="Ricci flow entropy laboratory")
    p.add_argument("command", choices=["flow", "mu-scan", "monotonicity",
                                       "diffeo-verify", "breather",
                                       "bound-check"])
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--preset", help="initial metric preset")
    p.add_argument("--tau", help="comma-separated tau values")
    p.add_argument("--alpha", type=float, help="breather scale factor")
    p.add_argument("--seed", type=int, help="optimizer RNG seed")
    return p


def _load_config(args) -> lab.ExperimentConfig:
    d = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise lab.ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(d, dict):
            raise lab.ConfigError("config must be a JSON object")
    if args.preset is not None:
        d["preset"] = args.preset
    if args.tau is not None:
        try:
            d["tau"] = [float(s) for s in args.tau.split(",") if s.strip()]
        except ValueError as exc:
            raise lab.ConfigError(f"bad --tau list: {exc}") from exc
    if args.alpha is not None:
        d["alpha"] = args.alpha
    if args.seed is not None:
        d["seed"] = args.seed
    return lab.ExperimentConfig.from_dict(d)


def _write_json(outdir, name, payload):
    os.makedirs(outdir, exist_ok=True)
    from .reports import _sanitize
    with open(os.path.join(outdir, name), "w") as fh:
        json.dump(_sanitize(payload), fh, sort_keys=True, indent=2,
                  allow_nan=False)
        fh.write("\n")


def _cmd_flow(cfg, outdir):
    traj = lab.run_flow(cfg)
    os.makedirs(outdir, exist_ok=True)
    flow.dump_trajectory(traj, os.path.join(outdir, "trajectory.csv"))
    print(f"flow: {traj.nsteps} steps to t={traj.t_end}, "
          f"trajectory written to {outdir}")
    return EXIT_OK


def _cmd_monotonicity(cfg, outdir):
    rep = lab.run_monotonicity(cfg)
    emit_report(rep, outdir)
    v = rep.verdicts
    print(f"monotonicity: W nondecreasing={v['w_nondecreasing']} "
          f"min increment={v['w_min_increment']:.3e} "
          f"inequality violation={v['integrated_inequality_violation']:.3e}")
    return EXIT_OK if v["passed"] else EXIT_VIOLATION


def _cmd_mu_scan(cfg, outdir):
    rep = lab.run_mu_monotonicity(cfg)
    emit_report(rep, outdir)
    os.makedirs(outdir, exist_ok=True)
    import csv
    with open(os.path.join(outdir, "mu_scan.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "mu", "grad_residual", "starts_used"])
        for row in rep.rows:
            w.writerow([repr(row["tau"]), repr(row["mu"]),
                        repr(row["grad_residual"]), row["starts_used"]])
    v = rep.verdicts
    print(f"mu-scan: nondecreasing={v['mu_nondecreasing']} "
          f"total increase={v['mu_total_increase']:.3e}")
    return EXIT_OK if v["passed"] else EXIT_VIOLATION


def _cmd_breather(cfg, outdir):
    res = lab.breather_contradiction(cfg)
    _write_json(outdir, "breather.json", res)
    print(f"breather: verdict={res['verdict']} margin={res['margin']:.4f} "
          f"scaling gap={res['scaling_gap']:.2e}")
    if res["verdict"] == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK if res["passed"] else EXIT_VIOLATION


def _cmd_bound_check(cfg, outdir):
    reps = lab.bound_check_scan(cfg)
    os.makedirs(outdir, exist_ok=True)
    import csv
    with open(os.path.join(outdir, "bound_check.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "delta", "lhs", "rhs", "slack"])
        for r in reps:
            w.writerow([repr(r["tau"]), repr(r["delta"]), repr(r["lhs"]),
                        repr(r["rhs"]), repr(r["slack"])])
    _write_json(outdir, "bound_check.json", {"rows": reps})
    ok = all(r["passed"] for r in reps)
    for r in reps:
        print(f"bound-check: tau={r['tau']:.6g} slack={r['slack']:.4e} "
              f"passed={r['passed']}")
    return EXIT_OK if ok else EXIT_VIOLATION


def _cmd_diffeo_verify(cfg, outdir):
    res = lab.diffeo_verify(cfg)
    payload = dict(res)
    payload["records"] = [
        {"h": r.h, "e_norm": r.e_norm, "E_val": r.E_val,
         "de_dh": r.de_dh, "de_dx": r.de_dx}
        for r in res["records"]]
    _write_json(outdir, "diffeo_verify.json", payload)
    print(f"diffeo-verify: slope(e)={res['slope_e']:.3f} "
          f"slope(E)={res['slope_E']:.3f} "
          f"inverse deviation={res['inverse_deviation']:.2e}")
    return EXIT_OK if res["passed"] else EXIT_VIOLATION


_DISPATCH = {
    "flow": _cmd_flow,
    "monotonicity": _cmd_monotonicity,
    "mu-scan": _cmd_mu_scan,
    "breather": _cmd_breather,
    "bound-check": _cmd_bound_check,
    "diffeo-verify": _cmd_diffeo_verify,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except lab.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADCONFIG
    try:
        return _DISPATCH[args.command](cfg, args.out)
    except lab.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADCONFIG
    except (flow.StabilityError, conjugate.PositivityError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except entropy.OptimizationError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
