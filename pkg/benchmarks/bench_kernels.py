#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs each hot kernel on realistic workloads under both backends and prints
median wall times with the speedup.  Useful when deciding whether a machine
without numba (GIBBS_MCID_BACKEND=numpy) is fast enough for full studies.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from gibbs_mcid import _kernels as K


def timeit(fn, repeat):
    fn()  # warm-up (numba compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def build_workloads(rng):
    n, B, m = 500, 1000, 4000
    x = rng.normal(1, 1, n)
    y = np.where(rng.random(n) < 0.6, 1, -1).astype(np.int64)
    o = np.argsort(x)
    xs, ys = x[o], y[o]
    idx = rng.integers(0, n, (B, n))
    edges, counts = K.get_impl("posterior_segments", "numpy")(xs, ys)
    logw = K.get_impl("segment_log_weights", "numpy")(edges, counts, 0.3, 0, 0.0, 1.0)
    cumw = np.cumsum(np.exp(logw))
    u_seg, u_pos = rng.random(100_000), rng.random(100_000)
    cov_idx = rng.integers(0, n, (200, n))
    cov_us, cov_up = rng.random((200, m)), rng.random((200, m))
    M = K.misclass_counts(ys)
    z, u = rng.standard_normal(12_000), rng.random(12_000)

    return {
        f"bootstrap_thetas (B={B}, n={n})": lambda impl: impl(x, y, idx),
        f"piecewise_sample (m=100k, n={n})": lambda impl: impl(
            edges, cumw, 0, 0.0, 1.0, u_seg, u_pos
        ),
        f"coverage_count (B=200, m={m})": lambda impl: impl(
            x, y, 0.3, 0, 0.0, 1.0, cov_idx, cov_us, cov_up, 0.9, 1.0
        ),
        "metropolis_chain (T=12k)": lambda impl: impl(
            xs, M, 0.3, 0, 0.0, 1.0, 1.0, 0.3, z, u
        ),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    workloads = build_workloads(rng)
    backends = K.available_backends()
    print(f"backends available: {', '.join(backends)}")
    header = f"{'kernel':38s} " + " ".join(f"{b:>12s}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9s}"
    print(header)
    for label, call in workloads.items():
        kernel = label.split(" ")[0]
        times = {}
        for b in backends:
            impl = K.get_impl(kernel, b)
            times[b] = timeit(lambda: call(impl), args.repeat)
        row = f"{label:38s} " + " ".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f" {times['numpy'] / times['numba']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
