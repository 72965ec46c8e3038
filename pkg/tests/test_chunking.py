import re
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chapkit.chunking import (
    Chunk,
    ChunkBudget,
    chunk_transcript,
    count_words,
    render_indexed_sentences,
)
from chapkit.corpus import Sentence, Transcript

from conftest import build_episode


class TestCountWords:
    def test_empty(self):
        assert count_words("") == 0

    def test_whitespace_collapse(self):
        assert count_words("hello  world ") == 2

    def test_hyphens_and_apostrophes_are_not_separators(self):
        assert count_words("it's state-of-the-art") == 2

    def test_mixed_whitespace(self):
        assert count_words("a\tb\nc   d") == 4


class TestChunkBudget:
    def test_defaults(self):
        budget = ChunkBudget()
        assert budget.total_words == 8000
        assert budget.context_words == 1000
        assert budget.body_words == 7000

    def test_context_must_fit_inside_total(self):
        with pytest.raises(ValueError):
            ChunkBudget(total_words=100, context_words=100)


def _transcript(word_counts):
    return Transcript(
        tuple(Sentence(" ".join(["w"] * n)) for n in word_counts)
    )


class TestChunkTranscript:
    def test_everything_fits(self):
        chunks = chunk_transcript(_transcript([10] * 10))
        assert chunks == [Chunk(0, 9, 100)]

    def test_greedy_packing_by_hand(self):
        chunks = chunk_transcript(_transcript([4000, 2500, 3000]))
        assert [(c.first_index, c.last_index) for c in chunks] == [(0, 1), (2, 2)]
        assert [c.body_word_count for c in chunks] == [6500, 3000]

    def test_oversized_sentence_forms_own_chunk(self):
        chunks = chunk_transcript(_transcript([9000, 10, 10]))
        assert [(c.first_index, c.last_index) for c in chunks] == [(0, 0), (1, 2)]

    def test_empty_transcript_errors(self):
        with pytest.raises(ValueError):
            chunk_transcript(Transcript(()))

    def test_table1_profile_chunks_per_episode(self, table1_corpus):
        counts = [len(chunk_transcript(e.transcript)) for e in table1_corpus]
        assert statistics.fmean(counts) == pytest.approx(1.75, abs=0.15)

    @settings(max_examples=150, deadline=None)
    @given(
        st.lists(st.integers(min_value=1, max_value=40), min_size=1, max_size=60),
        st.integers(min_value=5, max_value=80),
    )
    def test_tiling_invariant(self, word_counts, body_budget):
        transcript = _transcript(word_counts)
        budget = ChunkBudget(total_words=body_budget + 1, context_words=1)
        chunks = chunk_transcript(transcript, budget)
        assert chunks[0].first_index == 0
        assert chunks[-1].last_index == len(word_counts) - 1
        for prev, nxt in zip(chunks, chunks[1:]):
            assert nxt.first_index == prev.last_index + 1
        assert sum(c.body_word_count for c in chunks) == sum(word_counts)
        for c in chunks:
            single = c.first_index == c.last_index
            assert c.body_word_count <= budget.body_words or single
        assert chunks == chunk_transcript(transcript, budget)


class TestRenderIndexedSentences:
    def test_definition(self):
        transcript = Transcript((Sentence("Hi."), Sentence("Bye.")))
        assert render_indexed_sentences(transcript, Chunk(0, 1, 2)) == "0: Hi.\n1: Bye."

    def test_global_indexing(self):
        episode = build_episode([f"sentence {i}" for i in range(10)])
        text = render_indexed_sentences(episode.transcript, Chunk(5, 6, 4))
        lines = text.split("\n")
        assert lines[0].startswith("5: ")
        assert lines[1].startswith("6: ")

    @given(st.integers(min_value=1, max_value=30), st.data())
    def test_round_trip_indices(self, n, data):
        transcript = Transcript(tuple(Sentence(f"word number {i}") for i in range(n)))
        first = data.draw(st.integers(min_value=0, max_value=n - 1))
        last = data.draw(st.integers(min_value=first, max_value=n - 1))
        chunk = Chunk(first, last, 0)
        rendered = render_indexed_sentences(transcript, chunk)
        parsed = [int(m.group(1)) for m in re.finditer(r"^(\d+): ", rendered, re.M)]
        assert parsed == list(range(first, last + 1))
