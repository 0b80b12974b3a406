#!/usr/bin/env python3
"""Time the numba and numpy paths of each hot kernel side by side.

Run from the repository root:

    python benchmarks/bench_kernels.py [--n 2000000] [--lags 400] [--repeats 5]

The numba path needs a warm-up call (JIT compilation) which is excluded
from the timings.
"""

import argparse
import time

import numpy as np

from etherstat import _kernels

if not _kernels.USE_NUMBA:
    raise SystemExit(
        "numba backend inactive (ETHERSTAT_BACKEND=numpy?); "
        "the comparison needs both paths importable"
    )


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2_000_000, help="values per kernel call")
    ap.add_argument("--lags", type=int, default=400, help="autocorrelation lags")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.n

    values = rng.exponential(1000.0, n)
    edges = np.concatenate(([0.0], 2.0 * 2.0 ** np.arange(48)))

    acf_n = min(n, 200_000)
    xc = rng.standard_normal(acf_n)
    xc -= xc.mean()

    n_batches = n // 4
    epochs = np.sort(rng.integers(0, 10**10, n_batches)).astype(np.int64)
    batches = rng.integers(1, 5, n_batches).astype(np.int64)
    busy = rng.integers(5, 150, int(batches.sum())).astype(np.int64)

    cases = [
        (f"bin_counts (n={n:.0e})",
         lambda: _kernels._bin_counts_numba(values, edges),
         lambda: _kernels._bin_counts_numpy(values, edges)),
        (f"acf_sums (n={acf_n:.0e}, k={args.lags})",
         lambda: _kernels._acf_sums_numba(xc, args.lags),
         lambda: _kernels._acf_sums_numpy(xc, args.lags)),
        (f"schedule_frames (batches={n_batches:.0e})",
         lambda: _kernels._schedule_frames_numba(epochs, batches, busy),
         lambda: _kernels._schedule_frames_numpy(epochs, batches, busy)),
    ]

    print(f"{'kernel':38s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, nb, npath in cases:
        nb()  # JIT warm-up
        t_nb = best_of(nb, args.repeats)
        t_np = best_of(npath, args.repeats)
        print(f"{name:38s} {t_nb * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms {t_np / t_nb:7.2f}x")


if __name__ == "__main__":
    main()
