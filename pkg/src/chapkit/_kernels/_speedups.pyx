# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the numeric hot loops.

Signatures and results must match chapkit._kernels.pure exactly.
"""

from libc.stdlib cimport free, malloc


def lcs_length(a, b):
    """Length of the longest common subsequence of two integer sequences."""
    cdef Py_ssize_t m = len(a)
    cdef Py_ssize_t n = len(b)
    if m == 0 or n == 0:
        return 0
    if n > m:
        a, b = b, a
        m, n = n, m
    cdef long *xa = <long *> malloc(m * sizeof(long))
    cdef long *xb = <long *> malloc(n * sizeof(long))
    cdef long *row = <long *> malloc((n + 1) * sizeof(long))
    if xa == NULL or xb == NULL or row == NULL:
        free(xa)
        free(xb)
        free(row)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef long prev, cur, ai, best
    try:
        for i in range(m):
            xa[i] = a[i]
        for j in range(n):
            xb[j] = b[j]
        for j in range(n + 1):
            row[j] = 0
        for i in range(1, m + 1):
            prev = 0
            ai = xa[i - 1]
            for j in range(1, n + 1):
                cur = row[j]
                if ai == xb[j - 1]:
                    row[j] = prev + 1
                elif row[j - 1] > cur:
                    row[j] = row[j - 1]
                prev = cur
        best = row[n]
        return best
    finally:
        free(xa)
        free(xb)
        free(row)


def count_window_disagreements(Py_ssize_t n, Py_ssize_t k, ref, hyp):
    """Number of k-wide windows whose internal boundary counts differ."""
    cdef long *ref_cum = <long *> malloc(n * sizeof(long))
    cdef long *hyp_cum = <long *> malloc(n * sizeof(long))
    if ref_cum == NULL or hyp_cum == NULL:
        free(ref_cum)
        free(hyp_cum)
        raise MemoryError()
    cdef Py_ssize_t i
    cdef long disagreements = 0
    try:
        _fill_cumulative(ref_cum, n, ref)
        _fill_cumulative(hyp_cum, n, hyp)
        for i in range(n - k):
            if ref_cum[i + k] - ref_cum[i] != hyp_cum[i + k] - hyp_cum[i]:
                disagreements += 1
        return disagreements
    finally:
        free(ref_cum)
        free(hyp_cum)


cdef void _fill_cumulative(long *cum, Py_ssize_t n, gaps) except *:
    cdef Py_ssize_t j
    cdef long g, total
    for j in range(n):
        cum[j] = 0
    for g in gaps:
        cum[g] += 1
    total = 0
    for j in range(n):
        total += cum[j]
        cum[j] = total


def bm25_accumulate(int[:] doc_ids, int[:] tfs, double[:] norms,
                    double[:] scores, double idf, double k1):
    """Add one query term's BM25 contribution into the score accumulator."""
    cdef Py_ssize_t j
    cdef int d
    cdef double tf
    cdef double k1_plus_1 = k1 + 1.0
    for j in range(doc_ids.shape[0]):
        d = doc_ids[j]
        tf = tfs[j]
        scores[d] += idf * tf * k1_plus_1 / (tf + norms[d])
