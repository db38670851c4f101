#!/usr/bin/env python3
"""Compare the compiled kernel backend against the pure-Python fallback.

Two views:

* per-kernel timings (periodic 4th-order derivative, cyclic SPD factor,
  banded solve) on matrices assembled from a realistic depth/bed pair,
  both backends loaded side by side in one process;
* end-to-end stepping throughput, each backend in its own subprocess so
  the import-time selection via GNFLOW_PURE_PYTHON is exercised for real.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from gnflow import bathymetry
from gnflow._kernels import available_backends, backend_name
from gnflow.grid import Field, Grid
from gnflow.operator import assemble_A


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_table(sizes, repeats):
    mods = available_backends()
    rows = []
    for n in sizes:
        g = Grid(20.0, n)
        h = Field(g, 1.0 + 0.3 * np.sin(2.0 * np.pi * g.x / g.L))
        bed = bathymetry.fourier(g.L, [0.05, -0.03], [0.02, 0.04])
        mat = assemble_A(h, bed)
        rhs = np.cos(4.0 * np.pi * g.x / g.L)
        for kernel in ("deriv4", "factor", "solve"):
            timings = {}
            for name, mod in mods.items():
                if kernel == "deriv4":
                    fn = lambda: mod.deriv4(rhs, g.dx)
                elif kernel == "factor":
                    fn = lambda: mod.cyclic_spd_factor(mat.diag, mat.offdiag)
                else:
                    fac = mod.cyclic_spd_factor(mat.diag, mat.offdiag)
                    fn = lambda: mod.cyclic_spd_solve(fac, rhs)
                timings[name] = best_of(fn, repeats)
            rows.append((n, kernel, timings))
    return list(mods), rows


def print_kernel_table(names, rows):
    header = f"{'n':>6}  {'kernel':<8}"
    for name in names:
        header += f"  {name + ' (us)':>14}"
    if len(names) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, kernel, timings in rows:
        line = f"{n:>6}  {kernel:<8}"
        for name in names:
            line += f"  {timings[name] * 1e6:>14.1f}"
        if len(names) == 2:
            a, b = (timings[name] for name in names)
            line += f"  {max(a, b) / min(a, b):>7.1f}x"
        print(line)


_E2E = """
import time
from gnflow._kernels import backend_name
from gnflow.eulerian import EulerianState, run_eulerian
from gnflow.scenarios import build_scenario
s = build_scenario("gaussian-bump-splash", n={n})
t0 = time.perf_counter()
run_eulerian(EulerianState(0.0, s.h0, s.u0), s.bathy, s.grav,
             {steps} * 1e-3, fixed_dt=1e-3)
print(backend_name(), {steps} / (time.perf_counter() - t0))
"""


def end_to_end(n, steps):
    out = []
    for env_val in ("0", "1"):
        env = dict(os.environ, GNFLOW_PURE_PYTHON=env_val)
        res = subprocess.run(
            [sys.executable, "-c", _E2E.format(n=n, steps=steps)],
            capture_output=True, text=True, env=env, check=True)
        backend, rate = res.stdout.split()
        out.append((backend, float(rate)))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(
        description="kernel and stepping benchmarks, compiled vs fallback")
    ap.add_argument("--sizes", default="256,1024,4096,16384",
                    help="comma-separated grid sizes for the kernel table")
    ap.add_argument("--repeats", type=int, default=7,
                    help="timing repeats per cell (best is kept)")
    ap.add_argument("--e2e-n", type=int, default=2048,
                    help="grid size for the end-to-end stepping comparison")
    ap.add_argument("--steps", type=int, default=50,
                    help="fixed-dt steps for the end-to-end comparison")
    ap.add_argument("--skip-e2e", action="store_true",
                    help="only run the in-process kernel table")
    args = ap.parse_args(argv)

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"active backend in this process: {backend_name()}\n")
    names, rows = kernel_table(sizes, args.repeats)
    print_kernel_table(names, rows)
    if len(names) == 1:
        print("\n(compiled backend not importable; single-column table)")

    if not args.skip_e2e:
        print(f"\nend-to-end: {args.steps} RK4 steps of gaussian-bump-splash "
              f"at n={args.e2e_n}, one subprocess per backend")
        for backend, rate in end_to_end(args.e2e_n, args.steps):
            print(f"  {backend:<10} {rate:>8.1f} steps/s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
