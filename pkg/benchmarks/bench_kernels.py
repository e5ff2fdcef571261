"""Time the numba and numpy kernel variants side by side.

    python benchmarks/bench_kernels.py [--n 1200] [--repeat 5]
"""
import argparse
import time

import numpy as np

from digof import _accel
from digof.kernels import KERNELS


def _inputs(n, rng):
    a = (rng.random((n, n)) < 0.1).astype(np.uint8)
    np.fill_diagonal(a, 0)
    omega = rng.uniform(0.05, 0.2, (n, n))
    np.fill_diagonal(omega, 0.0)
    pts = rng.standard_normal((n, 4))
    ctr = rng.standard_normal((6, 4))
    labels = rng.integers(0, 6, n).astype(np.int64)
    gs = rng.integers(0, 3, n).astype(np.int64)
    gr = rng.integers(0, 4, n).astype(np.int64)
    return {
        "nearest_center": (pts, ctr),
        "centroids": (pts, labels, 6),
        "block_counts": (a, gs, gr, 3, 4),
        "residual_fill": (a.astype(np.float64), omega),
    }


def _best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1200)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    inputs = _inputs(args.n, np.random.default_rng(0))
    if not _accel.NUMBA_AVAILABLE:
        print("numba not installed; timing the numpy variants only")
    print(f"{'kernel':<16}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, (fast, slow) in KERNELS.items():
        call = inputs[name]
        t_slow = _best_of(slow, call, args.repeat)
        if _accel.NUMBA_AVAILABLE:
            fast(*call)  # compile outside the timed runs
            t_fast = _best_of(fast, call, args.repeat)
            print(f"{name:<16}{t_fast * 1e3:>12.3f}{t_slow * 1e3:>12.3f}{t_slow / t_fast:>10.2f}")
        else:
            print(f"{name:<16}{'-':>12}{t_slow * 1e3:>12.3f}{'-':>10}")


if __name__ == "__main__":
    main()
