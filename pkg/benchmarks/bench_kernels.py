#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Workloads mirror the three hot loops at realistic sizes:

* ROUGE-L LCS over title pairs (thousands of short pairs per corpus eval)
  plus a long-sequence case,
* WindowDiff window counting over transcript-sized boundary sequences,
* BM25 posting-list accumulation over a catalog-scale index slice.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import random
import time
from array import array

from chapkit._kernels import pure

try:
    from chapkit._kernels import _speedups
except ImportError:
    _speedups = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def lcs_workloads(rng):
    titles = [
        ([rng.randrange(40) for _ in range(rng.randint(2, 10))],
         [rng.randrange(40) for _ in range(rng.randint(2, 10))])
        for _ in range(20_000)
    ]
    long_a = [rng.randrange(60) for _ in range(400)]
    long_b = [rng.randrange(60) for _ in range(400)]

    def run(impl):
        def inner():
            for a, b in titles:
                impl.lcs_length(a, b)
            for _ in range(20):
                impl.lcs_length(long_a, long_b)

        return inner

    return "lcs_length (20k titles + 20x400x400)", run


def window_workloads(rng):
    instances = []
    for _ in range(5_000):
        n = 900
        k = 45
        ref = sorted(rng.sample(range(1, n), 11))
        hyp = sorted(rng.sample(range(1, n), 14))
        instances.append((n, k, ref, hyp))

    def run(impl):
        def inner():
            for n, k, ref, hyp in instances:
                impl.count_window_disagreements(n, k, ref, hyp)

        return inner

    return "count_window_disagreements (5k transcripts)", run


def bm25_workloads(rng):
    n_docs = 100_000
    norms = array("d", (rng.uniform(0.4, 1.8) for _ in range(n_docs)))
    terms = []
    for _ in range(60):
        df = rng.randint(500, 20_000)
        docs = sorted(rng.sample(range(n_docs), df))
        terms.append(
            (
                array("i", docs),
                array("i", (rng.randint(1, 30) for _ in docs)),
                rng.uniform(0.1, 4.0),
            )
        )

    def run(impl):
        def inner():
            scores = array("d", bytes(8 * n_docs))
            for ids, tfs, idf in terms:
                impl.bm25_accumulate(ids, tfs, norms, scores, idf, 0.9)

        return inner

    return "bm25_accumulate (60 terms over 100k docs)", run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3, help="best-of-N timing")
    args = parser.parse_args()

    if _speedups is None:
        print("compiled kernels not built (run: python setup.py build_ext --inplace)")
    rng = random.Random(1234)
    rows = []
    for name, make_run in (lcs_workloads(rng), window_workloads(rng), bm25_workloads(rng)):
        pure_s = _time(make_run(pure), args.repeats)
        if _speedups is not None:
            fast_s = _time(make_run(_speedups), args.repeats)
            rows.append((name, pure_s, fast_s, pure_s / fast_s))
        else:
            rows.append((name, pure_s, None, None))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'pure':>9}  {'compiled':>9}  {'speedup':>8}")
    for name, pure_s, fast_s, speedup in rows:
        if fast_s is None:
            print(f"{name:<{width}}  {pure_s:>8.3f}s  {'-':>9}  {'-':>8}")
        else:
            print(f"{name:<{width}}  {pure_s:>8.3f}s  {fast_s:>8.3f}s  {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
