"""Benchmark the numba kernels against the uncompiled fallbacks.

Runs both code paths in one process (the dispatcher's backend choice is
bypassed) and reports wall times and speedups for

* the lumped coupling-time batch kernel, and
* the full-coordinate event kernel used for marginal validation.

Usage: python bench/benchmark_backends.py [--replicates N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cowalk import _kernels
from cowalk.strategies import Strategy, rate_table


def _time(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lumped(replicates: int):
    d, m0 = 10, 40
    total, p2 = rate_table(Strategy.OPTIMAL, d, m0)
    rng = np.random.Generator(np.random.Philox(1))
    u = rng.random((replicates, m0, 2))
    exp_draws = -np.log1p(-u[:, :, 0])
    tau = np.empty(replicates)
    nj = np.zeros(replicates, dtype=np.int64)
    args = (total, p2, m0, np.inf, exp_draws, u[:, :, 1], tau, nj)

    rows = []
    if _kernels.USE_NUMBA:
        _kernels._lumped_batch_jit(*args)  # compile outside the timer
        rows.append(("numba", _time(_kernels._lumped_batch_jit, *args)))
    rows.append(("numpy", _time(_kernels._lumped_batch_numpy, *args)))
    return f"lumped batch (R={replicates}, m0={m0})", rows


def bench_marginal(replicates: int):
    d, n, horizon = 4, 8, 10.0
    rng = np.random.Generator(np.random.Philox(2))
    ev_count = rng.poisson(2.0 * n * horizon, replicates).astype(np.int64)
    offsets = np.zeros(replicates + 1, dtype=np.int64)
    np.cumsum(ev_count, out=offsets[1:])
    u = rng.random((int(offsets[-1]), 4))
    x0 = np.zeros(n, dtype=np.int64)
    y0 = np.ones(n, dtype=np.int64)

    def run(fn):
        xchg = np.zeros((replicates, n), dtype=np.int64)
        ychg = np.zeros((replicates, n), dtype=np.int64)
        xinc = np.zeros(d, dtype=np.int64)
        yinc = np.zeros(d, dtype=np.int64)
        joint = np.zeros(replicates, dtype=np.int64)
        fn(_kernels.OPTIMAL_CODE, d, n, x0, y0, ev_count, offsets[:-1], u,
           xchg, ychg, xinc, yinc, joint)

    rows = []
    if _kernels.USE_NUMBA:
        run(_kernels._marginal_batch_jit)
        rows.append(("numba", _time(run, _kernels._marginal_batch_jit)))
    rows.append(("python", _time(run, _kernels._marginal_batch_loop, )))
    return f"event kernel (R={replicates}, n={n}, T={horizon})", rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--replicates", type=int, default=200_000)
    args = parser.parse_args()

    print(f"selected backend: {_kernels.backend_name()}")
    for title, rows in (bench_lumped(args.replicates),
                        bench_marginal(max(args.replicates // 40, 1000))):
        print(f"\n{title}")
        base = rows[-1][1]
        for name, seconds in rows:
            speedup = base / seconds
            print(f"  {name:>7}: {seconds * 1e3:9.2f} ms   ({speedup:6.1f}x vs fallback)")


if __name__ == "__main__":
    main()
