#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Both implementations are imported directly, so the comparison runs in one
process regardless of the PLATEFLOW_NUMBA flag.  The end-to-end row times one
full implicit step, whose residual evaluations go through whichever backend
the package selected at import.
"""

import time

import numpy as np

from plateflow import _kernels_numpy as knp
from plateflow import build_grid, solve_step, StepConfig
from plateflow.kernels import backend_name

try:
    from plateflow import _kernels_numba as knb

    HAVE_NUMBA = True
except ImportError:
    knb = None
    HAVE_NUMBA = False


def median_time(fn, *args, repeats=200):
    fn(*args)  # warmup (and JIT compile)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return float(np.median(times)) * 1e6  # microseconds


def bench_kernels():
    rng = np.random.default_rng(0)
    cases = []
    for m in (63, 1023, 16383):
        cases.append((f"1d m={m}", "1d", rng.normal(size=m), 1.0 / (m + 1)))
    for m in (31, 127, 255):
        cases.append((f"2d m={m}x{m}", "2d", rng.normal(size=(m, m)), 1.0 / (m + 1)))

    print(f"{'case':14s} {'kernel':10s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for label, kind, u, h in cases:
        if kind == "1d":
            ops = (("lap", knp.laplacian_1d, knb.laplacian_1d if HAVE_NUMBA else None, (u, h)),)
            w = knp.laplacian_1d(u, h)
            ops += (("lapT", knp.laplacian_adjoint_1d,
                     knb.laplacian_adjoint_1d if HAVE_NUMBA else None, (w, h)),)
        else:
            ops = (("lap", knp.laplacian_2d, knb.laplacian_2d if HAVE_NUMBA else None, (u, h, h)),)
            w = knp.laplacian_2d(u, h, h)
            ops += (("lapT", knp.laplacian_adjoint_2d,
                     knb.laplacian_adjoint_2d if HAVE_NUMBA else None, (w, h, h)),)
        for name, f_np, f_nb, args in ops:
            t_np = median_time(f_np, *args)
            if f_nb is None:
                print(f"{label:14s} {name:10s} {t_np:10.2f} {'n/a':>10s} {'n/a':>8s}")
                continue
            t_nb = median_time(f_nb, *args)
            print(f"{label:14s} {name:10s} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:8.2f}")


def bench_step():
    g = build_grid(2, [1.0, 1.0], [31, 31])
    rng = np.random.default_rng(1)
    f = rng.uniform(-1.0, 0.3, g.n_interior)
    u_prev = f + np.abs(rng.normal(0.0, 1.0, g.n_interior))
    cfg = StepConfig(tau=1e-2)
    solve_step(g, u_prev, f, cfg)  # warmup
    start = time.perf_counter()
    for _ in range(5):
        solve_step(g, u_prev, f, cfg)
    elapsed = (time.perf_counter() - start) / 5
    print(f"\nfull 2d 31x31 step via '{backend_name()}' backend: {elapsed * 1e3:.1f} ms")
    print("rerun with PLATEFLOW_NUMBA=0 to time the numpy backend end to end")


if __name__ == "__main__":
    if not HAVE_NUMBA:
        print("numba not importable; showing numpy timings only")
    bench_kernels()
    bench_step()
