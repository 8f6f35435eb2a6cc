"""Benchmark the spectrahedron projection backends.

Runs the compiled kernel and the pure-numpy fallback on the same batch of
random Hermitian matrices and reports per-projection wall time plus the
iteration counts, for a range of matrix sizes and distances from the
feasible set. Usage:

    python3 benchmarks/bench_projection.py [--sizes 8,20,64] [--reps 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from irsnoma._kernels import BACKEND
from irsnoma._kernels._spectra_py import project_unit_diag_psd as project_py

try:
    from irsnoma._kernels._spectra import project_unit_diag_psd as project_c
except ImportError:
    project_c = None


def _instances(n: int, scale: float, count: int, seed: int):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        out.append(scale * 0.5 * (a + a.conj().T))
    return out

def _bench(fn, mats, reps: int):
    its = 0
    t0 = time.perf_counter()
    for _ in range(reps):
        for m in mats:
            _, it, _ = fn(m, tol=1e-9, max_iter=500)
            its += it
    dt = time.perf_counter() - t0
    calls = reps * len(mats)
    return dt / calls * 1e6, its / calls

def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="8,20,64")
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]

    print(f"active backend: {BACKEND}")
    if project_c is None:
        print("compiled kernel unavailable; benchmarking the fallback only")
    header = f"{'n':>4} {'scale':>6} {'numpy us':>10} {'iters':>6}"
    if project_c is not None:
        header += f" {'compiled us':>12} {'iters':>6} {'speedup':>8}"
    print(header)
    for n in sizes:
        for scale in (0.5, 5.0):
            mats = _instances(n, scale, count=8, seed=42)
            us_py, it_py = _bench(project_py, mats, args.reps)
            line = f"{n:>4} {scale:>6.1f} {us_py:>10.1f} {it_py:>6.1f}"
            if project_c is not None:
                us_c, it_c = _bench(project_c, mats, args.reps)
                line += f" {us_c:>12.1f} {it_c:>6.1f} {us_py / us_c:>7.1f}x"
            print(line)

if __name__ == "__main__":
    main()
