"""Time the Jacobi eigensolver backends against each other and against LAPACK.

    python3 benchmarks/bench_kernels.py [--sizes 10,40,80,160] [--repeat 3]

With MINDIAG_DISABLE_NUMBA=1 the numba column is skipped. The script also
times a full ``eig_sym`` call through the active backend, which is what the
solver and certificate code actually use.
"""

import argparse
import time

import numpy as np

from mindiag import _accel, kernels
from mindiag.spectral import eig_sym


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="10,40,80,160")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(args.seed)

    if _accel.USE_NUMBA:
        # trigger compilation outside the timed region
        kernels.jacobi_cyclic_numba(np.eye(3), np.eye(3), 1e-14, 10)

    print(f"active backend: {_accel.backend_name()}")
    header = f"{'n':>5} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8} {'eig_sym [s]':>12} {'eigh [s]':>10} {'max |dw|':>10}"
    print(header)
    for n in sizes:
        a = rng.standard_normal((n, n))
        a = (a + a.T) / 2
        ref = np.linalg.eigvalsh(a)
        t_np, (w_np, *_) = best_of(lambda: kernels.jacobi_parallel_numpy(a, np.eye(n), 1e-14, 100), args.repeat)
        dw = float(np.max(np.abs(np.sort(w_np) - ref)))
        if _accel.USE_NUMBA:
            t_nb, (w_nb, *_) = best_of(lambda: kernels.jacobi_cyclic_numba(a, np.eye(n), 1e-14, 100), args.repeat)
            dw = max(dw, float(np.max(np.abs(np.sort(w_nb) - ref))))
            nb, speed = f"{t_nb:11.4f}", f"{t_np / t_nb:8.1f}"
        else:
            nb, speed = f"{'-':>11}", f"{'-':>8}"
        t_es, _ = best_of(lambda: eig_sym(a), args.repeat)
        t_la, _ = best_of(lambda: np.linalg.eigh(a), args.repeat)
        print(f"{n:5d} {t_np:11.4f} {nb} {speed} {t_es:12.4f} {t_la:10.5f} {dw:10.2e}")


if __name__ == "__main__":
    main()
