#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--n-logs 1000000] [--n-items 10]

Both backends consume identical pre-drawn uniforms, so outputs are checked
for exact equality while timing.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from bvnope._kernels import available_backends
from bvnope.bvn import decompose, stay_probability_matrix
from bvnope.correction import BvnRankingSampler, correct_mc
from bvnope.rankings import Ranking
from bvnope.rules import PinRule, RuleSet


def timeit(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_kernel_ops(backends, n_logs, n):
    rng = np.random.default_rng(0)
    rankings = np.argsort(rng.random((n_logs, n)), axis=1).astype(np.int64)
    items = np.array([0, 3], dtype=np.int64)
    targets = np.array([0, n - 1], dtype=np.int64)
    probs = np.array([0.95, 0.5])
    u_rules = rng.random((n_logs, 2))
    relevance = (rng.random((n_logs, n)) < 0.5).astype(np.float64)
    bias = 1.0 / np.arange(1, n + 1)
    u_clicks = rng.random((n_logs, n))

    rows = []
    outputs = {}
    for name, impl in backends.items():
        t_rules, (displayed, _) = timeit(
            lambda: impl.apply_pin_rules_batch(rankings, items, targets, probs, u_rules)
        )
        t_clicks, clicks = timeit(
            lambda: impl.bernoulli_clicks_batch(displayed, relevance, bias, u_clicks)
        )
        t_counts, counts = timeit(lambda: impl.display_counts(displayed))
        outputs[name] = (displayed, clicks, counts)
        rows.append((name, t_rules, t_clicks, t_counts))

    if len(outputs) == 2:
        a, b = outputs.values()
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), "backends disagree!"

    print(f"\nkernels at n_logs={n_logs:,}, n={n} (best of 3, seconds)")
    print(f"{'backend':10s} {'pin rules':>12s} {'clicks':>12s} {'counts':>12s}")
    for name, t_rules, t_clicks, t_counts in rows:
        print(f"{name:10s} {t_rules:12.4f} {t_clicks:12.4f} {t_counts:12.4f}")
    if len(rows) == 2:
        by_name = {r[0]: r[1:] for r in rows}
        speedups = [p / c for p, c in zip(by_name["pure"], by_name["cython"])]
        print(f"{'speedup':10s} " + " ".join(f"{s:11.1f}x" for s in speedups))


def bench_mc_correction(n_samples, n):
    decomposition = decompose(stay_probability_matrix(n, 0.95).entries)
    sampler = BvnRankingSampler(Ranking.identity(n), decomposition)
    rules = RuleSet((PinRule(0, 1, 0.95),))
    print(f"\nend-to-end Monte Carlo correction, L={n_samples:,}")
    import bvnope._kernels as kernels

    saved = (kernels.apply_pin_rules_batch, kernels.display_counts)
    try:
        for name, impl in available_backends().items():
            kernels.apply_pin_rules_batch = impl.apply_pin_rules_batch
            kernels.display_counts = impl.display_counts
            t, _ = timeit(lambda: correct_mc(sampler, rules, n_samples, np.random.default_rng(1)), repeats=2)
            print(f"{name:10s} {t:10.3f}s")
    finally:
        kernels.apply_pin_rules_batch, kernels.display_counts = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-logs", type=int, default=1_000_000)
    parser.add_argument("--n-items", type=int, default=10)
    args = parser.parse_args()

    backends = available_backends()
    print("available backends:", ", ".join(backends))
    bench_kernel_ops(backends, args.n_logs, args.n_items)
    bench_mc_correction(args.n_logs, args.n_items)


if __name__ == "__main__":
    main()
