"""Time the compiled and numpy kernels on report-sized grids.

    PYTHONPATH=src python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from nvpower import _accel, kernels


def cases(n):
    w = 1e-5
    x = np.linspace(-1.5 * w, 1.5 * w, n)
    z = np.linspace(0.0, 3 * w, n)
    rho = np.linspace(0.0, 1.5 * w, n // 2 + 1)
    zl = np.linspace(-1.5 * w, 1.5 * w, n)
    f = np.random.default_rng(0).random((n, n))
    wx = np.random.default_rng(1).random((20, n))
    wz = np.random.default_rng(2).random((20, n))
    return {
        "strip_bx": lambda k: k(x, z, 0.0, w, 0.1),
        "loop_bz": lambda k: k(rho, zl, w, 0.2),
        "region_sums": lambda k: k(f, wx, wz),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=481)
    args = ap.parse_args()
    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<12} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, call in cases(args.size).items():
        np_fn = getattr(kernels, f"{name}_np")
        nb_fn = getattr(kernels, f"{name}_nb")
        call(nb_fn)  # compile outside the timed region
        t_np = min(timeit.repeat(lambda: call(np_fn), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: call(nb_fn), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12} {t_np:>10.2f} {t_nb:>10.2f} {t_np / t_nb:>8.1f}")


if __name__ == "__main__":
    main()
