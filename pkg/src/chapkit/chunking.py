"""Word counting, sentence indexing, and budgeted transcript chunking.

Transcripts are cut into contiguous, non-overlapping chunks whose body text
stays under a word budget; sentences are never split. Word counts are
whitespace-token counts throughout the package, since all budgets are
expressed in words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from chapkit.corpus import Transcript


def count_words(text: str) -> int:
    """Number of maximal non-whitespace runs in ``text``."""
    return len(text.split())


@dataclass(frozen=True)
class ChunkBudget:
    """Word budget for one generator call.

    ``total_words`` covers the whole rendered input; ``context_words`` of it
    is reserved for metadata and previously predicted titles, leaving
    ``body_words`` for the indexed sentences.
    """

    total_words: int = 8000
    context_words: int = 1000

    def __post_init__(self):
        if self.total_words <= 0:
            raise ValueError("total_words must be positive")
        if self.context_words < 0:
            raise ValueError("context_words must be non-negative")
        if self.context_words >= self.total_words:
            raise ValueError("context_words must be smaller than total_words")

    @property
    def body_words(self) -> int:
        return self.total_words - self.context_words


@dataclass(frozen=True)
class Chunk:
    """A contiguous sentence window [first_index, last_index] of a transcript."""

    first_index: int
    last_index: int
    body_word_count: int


def chunk_transcript(transcript: Transcript, budget: ChunkBudget = ChunkBudget()) -> list[Chunk]:
    """Greedy left-to-right packing of sentences into body-budget chunks.

    A chunk is extended while adding the next sentence keeps its word count
    within ``budget.body_words``. A single sentence longer than the budget
    forms its own chunk. The returned chunks tile the transcript exactly:
    no gaps, no overlaps.
    """
    sentences = transcript.sentences
    if not sentences:
        raise ValueError("transcript is empty")
    chunks: list[Chunk] = []
    first = 0
    words = 0
    for i, sentence in enumerate(sentences):
        if i > first and words + sentence.word_count > budget.body_words:
            chunks.append(Chunk(first, i - 1, words))
            first = i
            words = 0
        words += sentence.word_count
    chunks.append(Chunk(first, len(sentences) - 1, words))
    return chunks


def render_indexed_sentences(transcript: Transcript, chunk: Chunk) -> str:
    """One line per sentence, "<global_index>: <text>", joined by newlines.

    Indices are episode-global, not reset per chunk, so a predicted start
    index is unambiguous regardless of which chunk produced it.
    """
    sentences = transcript.sentences
    if not (0 <= chunk.first_index <= chunk.last_index < len(sentences)):
        raise ValueError(f"chunk [{chunk.first_index}, {chunk.last_index}] out of range")
    return "\n".join(
        f"{i}: {sentences[i].text}" for i in range(chunk.first_index, chunk.last_index + 1)
    )
