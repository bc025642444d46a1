"""Timing comparison of the compiled stencil kernels against the
pure-numpy fallback. Run directly: python benchmarks/bench_stencils.py
"""
import time

import numpy as np

from riccilab._kernels import _numpy_backend as npb

try:
    from riccilab._kernels import _stencils as cyb
except ImportError:
    cyb = None

FUNCS = ["lap5", "diff_x", "diff_y", "diff_xx", "diff_yy", "diff_xy",
         "dirichlet_energy"]


def _time(fn, args, reps):
    fn(*args)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def main():
    rng = np.random.default_rng(0)
    print(f"{'function':<18}{'N':>6}{'numpy (us)':>14}{'cython (us)':>14}"
          f"{'speedup':>10}")
    for N in (64, 128, 256):
        f = np.ascontiguousarray(rng.standard_normal((N, N)))
        h = 1.0 / N
        reps = max(20, 2_000_000 // (N * N))
        for name in FUNCS:
            if name in ("lap5", "dirichlet_energy", "diff_xy"):
                args = (f, h, h)
            else:
                args = (f, h)
            t_np = _time(getattr(npb, name), args, reps)
            if cyb is None:
                print(f"{name:<18}{N:>6}{t_np * 1e6:>14.2f}{'n/a':>14}"
                      f"{'':>10}")
                continue
            t_cy = _time(getattr(cyb, name), args, reps)
            out_np = np.asarray(getattr(npb, name)(*args))
            out_cy = np.asarray(getattr(cyb, name)(*args))
            scale = max(1.0, float(np.max(np.abs(out_np))))
            assert np.allclose(out_np, out_cy, rtol=1e-12,
                               atol=1e-12 * scale)
            print(f"{name:<18}{N:>6}{t_np * 1e6:>14.2f}{t_cy * 1e6:>14.2f}"
                  f"{t_np / t_cy:>10.2f}")


if __name__ == "__main__":
    main()
