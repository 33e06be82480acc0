"""Compare the numba and pure-numpy kernel backends.

Usage: python3 benchmarks/bench_backends.py [--repeat N]

Kernel timings call the compiled function and its ``py_func`` in the same
process. The end-to-end timing runs a verify-mode PAGM trace (dual solver
heavy) in two subprocesses, one with ``COMPOSOPT_DISABLE_JIT=1``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from composopt import _jit, kernels

E2E = """
import time
import numpy as np
from composopt import derive_pagm_params, tanh_affine, DCProblem, MaxCoordinate
from composopt.pagm import run_pagm
rng = np.random.default_rng(0)
A1, A2 = 0.5 * rng.standard_normal((2, 3, 3))
g1 = tanh_affine(A1, 0.1 * rng.standard_normal(3))
g2 = tanh_affine(A2, 0.1 * rng.standard_normal(3))
h = MaxCoordinate(3)
P = DCProblem(g1, g2, h, h)
p = derive_pagm_params(P, 0.5, 1 / (2 + P.rho), K=40)
run_pagm(P, p, seed=0, verify=False)
t0 = time.perf_counter()
run_pagm(P, p, seed=0, verify=True)
print(time.perf_counter() - t0)
"""


def kernel_cases(rng):
    M = rng.standard_normal((6, 6))
    M = M @ M.T + 0.1 * np.eye(6)
    c = rng.standard_normal(6)
    lam0 = np.zeros(6)
    u = rng.standard_normal(64)
    X = rng.standard_normal((2000, 8))
    x = rng.standard_normal(8)
    return {
        "soft_threshold": (kernels.soft_threshold, (u, 0.3)),
        "capped_abs_prox": (kernels.capped_abs_prox, (u, 0.5, 0.2)),
        "project_simplex": (kernels.project_simplex, (u, 1.0)),
        "dual_qp[box]": (kernels.dual_qp, (M, c, kernels.BOX, 1.0, 0.3, lam0, 1e-10, 1e-13, 200000)),
        "dual_qp[simplex]": (kernels.dual_qp, (M, c, kernels.SIMPLEX, 1.0, 0.3, lam0, 1e-10, 1e-13, 200000)),
        "sqdist_rows": (kernels.sqdist_rows, (X, x)),
    }


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'numba [us]':>12} {'numpy [us]':>12} {'speedup':>8}")
    for name, (fn, args) in kernel_cases(rng).items():
        fn(*args)  # compile
        n = 200
        jit = min(timeit.repeat(lambda: fn(*args), number=n, repeat=repeat)) / n
        py = min(timeit.repeat(lambda: fn.py_func(*args), number=n, repeat=repeat)) / n
        print(f"{name:<18} {jit * 1e6:12.2f} {py * 1e6:12.2f} {py / jit:8.1f}")


def bench_end_to_end():
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, COMPOSOPT_DISABLE_JIT=flag)
        res = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        out[label] = float(res.stdout.strip().splitlines()[-1])
    print(f"verify-mode PAGM run (max-coordinate, d=m=3, K=40): "
          f"numba {out['numba']:.3f} s, numpy {out['numpy']:.3f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    if not _jit.USE_JIT:
        sys.exit("the numba backend is disabled; unset COMPOSOPT_DISABLE_JIT to compare")
    bench_kernels(args.repeat)
    if not args.skip_e2e:
        bench_end_to_end()


if __name__ == "__main__":
    main()
