"""Pure-Python reference implementations of the numeric hot loops.

The compiled module ``_speedups`` mirrors these signatures exactly; both
backends must stay result-identical (see tests/test_kernels.py).
"""

from __future__ import annotations


def lcs_length(a, b) -> int:
    """Length of the longest common subsequence of two integer sequences."""
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        return 0
    if n > m:
        # keep the rolling row short
        a, b = b, a
        m, n = n, m
    row = [0] * (n + 1)
    for i in range(1, m + 1):
        prev = 0
        ai = a[i - 1]
        for j in range(1, n + 1):
            cur = row[j]
            if ai == b[j - 1]:
                row[j] = prev + 1
            elif row[j - 1] > cur:
                row[j] = row[j - 1]
            prev = cur
    return row[n]


def count_window_disagreements(n: int, k: int, ref, hyp) -> int:
    """Number of k-wide windows whose internal boundary counts differ.

    Boundaries are gap positions in 1..n-1 (a boundary before sentence g);
    window i spans sentences i..i+k and contains the gaps i+1..i+k.
    """
    ref_cum = _cumulative_counts(n, ref)
    hyp_cum = _cumulative_counts(n, hyp)
    disagreements = 0
    for i in range(n - k):
        if ref_cum[i + k] - ref_cum[i] != hyp_cum[i + k] - hyp_cum[i]:
            disagreements += 1
    return disagreements


def _cumulative_counts(n, gaps):
    counts = [0] * n
    for g in gaps:
        counts[g] += 1
    cum = [0] * n
    total = 0
    for j in range(n):
        total += counts[j]
        cum[j] = total
    return cum


def bm25_accumulate(doc_ids, tfs, norms, scores, idf: float, k1: float) -> None:
    """Add one query term's BM25 contribution into the score accumulator.

    ``norms[d]`` must hold the precomputed k1 * (1 - b + b * len_d / avg_len)
    for document d; ``scores`` is modified in place.
    """
    k1_plus_1 = k1 + 1.0
    for j in range(len(doc_ids)):
        d = doc_ids[j]
        tf = tfs[j]
        scores[d] += idf * tf * k1_plus_1 / (tf + norms[d])
