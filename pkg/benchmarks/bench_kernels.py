"""Compare the compiled and numpy Schur-complement kernels.

Usage: python3 benchmarks/bench_kernels.py [--sizes 3 6 10] [--repeat 5]

The kernel timings use the constraint sets of greedy-method problems for
smooth functions.  The end-to-end column runs a full solve once per backend
in a subprocess, since the backend is chosen at import time.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from pepsynth.classes import SmoothStronglyConvex
from pepsynth.pep import build_gfom_pep
from pepsynth.sdp import _schur_py
from pepsynth.sdp.ipm import SparseSymRows
from pepsynth.sdp.kernels import BACKEND

try:
    from pepsynth.sdp import _schur
except ImportError:
    _schur = None

SOLVE_SNIPPET = (
    "import time\n"
    "from pepsynth.classes import SmoothStronglyConvex\n"
    "from pepsynth.pep import build_gfom_pep\n"
    "from pepsynth.sdp import solve\n"
    "P = build_gfom_pep(SmoothStronglyConvex(0.01, 1.0), {N}, 1.0)\n"
    "t = time.perf_counter(); solve(P); print(time.perf_counter() - t)\n"
)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def solve_time(N, pure):
    env = dict(os.environ, PEPSYNTH_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(N=N)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[3, 6, 10, 15])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-solve", action="store_true", help="skip the end-to-end solves")
    args = ap.parse_args()

    if _schur is None:
        print("compiled kernel not built; only the numpy kernel is available")
    print(f"default backend: {BACKEND}")
    print(f"{'N':>3} {'m':>5} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8} {'solve py [s]':>13} {'solve cy [s]':>13}")
    rng = np.random.default_rng(0)
    for N in args.sizes:
        P = build_gfom_pep(SmoothStronglyConvex(0.01, 1.0), N, 1.0)
        rows = SparseSymRows([c.A for c in P.constraints])
        B = rng.standard_normal((P.psd_side, P.psd_side))
        W = B @ B.T
        argv = (W, rows.indptr, rows.rows, rows.cols, rows.vals)
        t_py = best_of(lambda: _schur_py.schur_complement(*argv), args.repeat)
        line = f"{N:>3} {len(P.constraints):>5} {1e3 * t_py:>11.2f}"
        if _schur is not None:
            t_cy = best_of(lambda: _schur.schur_complement(*argv), args.repeat)
            diff = np.abs(_schur.schur_complement(*argv) - _schur_py.schur_complement(*argv)).max()
            assert diff <= 1e-9 * max(1.0, np.abs(W).max() ** 2), diff
            line += f" {1e3 * t_cy:>12.2f} {t_py / t_cy:>8.1f}"
        else:
            line += f" {'-':>12} {'-':>8}"
        if not args.no_solve:
            line += f" {solve_time(N, True):>13.2f}"
            line += f" {solve_time(N, False):>13.2f}" if _schur is not None else f" {'-':>13}"
        print(line)


if __name__ == "__main__":
    main()
