"""Backend parity: the compiled kernels must match the pure ones exactly."""

import random
from array import array

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chapkit import _kernels
from chapkit._kernels import pure

try:
    from chapkit._kernels import _speedups
except ImportError:
    _speedups = None

needs_speedups = pytest.mark.skipif(_speedups is None, reason="compiled kernels not built")

BACKENDS = [pure] if _speedups is None else [pure, _speedups]


@pytest.mark.parametrize("impl", BACKENDS)
def test_lcs_basics(impl):
    assert impl.lcs_length([], []) == 0
    assert impl.lcs_length([1, 2, 3], []) == 0
    assert impl.lcs_length([1, 2, 3], [1, 2, 3]) == 3
    assert impl.lcs_length([1, 2, 3], [4, 5, 6]) == 0
    assert impl.lcs_length([1, 2, 3, 4], [2, 4, 1, 3]) == 2


@needs_speedups
@given(
    st.lists(st.integers(min_value=0, max_value=8), max_size=30),
    st.lists(st.integers(min_value=0, max_value=8), max_size=30),
)
def test_lcs_parity(a, b):
    assert _speedups.lcs_length(a, b) == pure.lcs_length(a, b)


@needs_speedups
@given(st.data())
def test_window_parity(data):
    n = data.draw(st.integers(min_value=2, max_value=40))
    k = data.draw(st.integers(min_value=1, max_value=n - 1))
    gaps = st.lists(
        st.integers(min_value=1, max_value=n - 1), unique=True, max_size=n - 1
    ).map(sorted)
    ref = data.draw(gaps)
    hyp = data.draw(gaps)
    assert _speedups.count_window_disagreements(n, k, ref, hyp) == (
        pure.count_window_disagreements(n, k, ref, hyp)
    )


@needs_speedups
def test_bm25_parity():
    rng = random.Random(7)
    n_docs = 50
    norms = array("d", (rng.uniform(0.3, 2.0) for _ in range(n_docs)))
    for _ in range(20):
        docs = sorted(rng.sample(range(n_docs), rng.randint(1, 20)))
        ids = array("i", docs)
        tfs = array("i", (rng.randint(1, 12) for _ in docs))
        idf = rng.uniform(0.01, 3.0)
        k1 = rng.uniform(0.2, 2.0)
        scores_a = array("d", bytes(8 * n_docs))
        scores_b = array("d", bytes(8 * n_docs))
        pure.bm25_accumulate(ids, tfs, norms, scores_a, idf, k1)
        _speedups.bm25_accumulate(ids, tfs, norms, scores_b, idf, k1)
        assert list(scores_a) == pytest.approx(list(scores_b), rel=1e-12, abs=1e-300)


def test_selected_backend_exports():
    assert _kernels.BACKEND in ("pure", "compiled")
    assert _kernels.lcs_length([1], [1]) == 1
