"""Seeded synthetic corpora for tests, benchmarks, and demos.

The default profile mirrors a production-scale podcast catalog: documents
around 11.8k words (a mix of single-, double-, and triple-chunk episodes
under the default 7000-word body budget), roughly 11 chapters per episode
with ~81-sentence segments, ~6-word titles shorter than 15 words, ~100-word
descriptions, and timestamps at a natural speaking rate so chapter
durations land inside the 30 s - 30 min filter window.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from chapkit.corpus import (
    ChapterSet,
    Episode,
    EpisodeMetadata,
    Sentence,
    Transcript,
)

# (target document words, probability); expected chunks/episode = 1.75 under
# a 7000-word body budget, expected words/doc ~ 11.8k
_DOC_WORD_BUCKETS = ((6800, 0.35), (13500, 0.55), (20000, 0.10))

# title lengths 1..14 weighted to a ~6.3-word mean with wide spread
_TITLE_LENGTH_WEIGHTS = {
    1: 10, 2: 10, 3: 10, 4: 10, 5: 8, 6: 8, 7: 8,
    8: 6, 9: 6, 10: 6, 11: 5, 12: 5, 13: 4, 14: 4,
}


@dataclass(frozen=True)
class SyntheticProfile:
    doc_word_buckets: tuple[tuple[int, float], ...] = _DOC_WORD_BUCKETS
    min_sentence_words: int = 9
    max_sentence_words: int = 17
    sentences_per_segment: int = 81
    min_segment_sentences: int = 8
    max_segment_sentences: int = 300
    description_words: int = 102
    words_per_second: float = 2.5
    vocabulary_size: int = 5000


DEFAULT_PROFILE = SyntheticProfile()


def _word(rng: random.Random, vocabulary_size: int) -> str:
    return f"w{rng.randrange(vocabulary_size)}"


def _words(rng: random.Random, n: int, vocabulary_size: int) -> list[str]:
    return [_word(rng, vocabulary_size) for _ in range(n)]


def _pick_bucket(rng: random.Random, buckets) -> int:
    roll = rng.random()
    acc = 0.0
    for words, probability in buckets:
        acc += probability
        if roll < acc:
            return words
    return buckets[-1][0]


def _segment_lengths(rng: random.Random, n_sentences: int, n_segments: int, profile) -> list[int]:
    lengths = []
    remaining = n_sentences
    for i in range(n_segments - 1):
        segments_left = n_segments - i
        base = remaining / segments_left
        low = max(profile.min_segment_sentences, int(base * 0.6))
        high = min(
            profile.max_segment_sentences,
            remaining - profile.min_segment_sentences * (segments_left - 1),
            int(base * 1.4) + 1,
        )
        lengths.append(rng.randint(min(low, high), high))
        remaining -= lengths[-1]
    lengths.append(remaining)
    return lengths


def _make_episode(rng: random.Random, index: int, profile: SyntheticProfile) -> Episode:
    target_words = _pick_bucket(rng, profile.doc_word_buckets)
    sentences = []
    words = 0
    clock = 0.0
    while words < target_words:
        n = rng.randint(profile.min_sentence_words, profile.max_sentence_words)
        text = " ".join(_words(rng, n, profile.vocabulary_size)) + "."
        duration = n / profile.words_per_second
        sentences.append(Sentence(text, start_s=round(clock, 3), end_s=round(clock + duration, 3)))
        clock += duration
        words += n

    n_sentences = len(sentences)
    n_segments = max(2, round(n_sentences / profile.sentences_per_segment))
    lengths = _segment_lengths(rng, n_sentences, n_segments, profile)
    starts = []
    cursor = 0
    for length in lengths:
        starts.append(cursor)
        cursor += length
    title_lengths = list(_TITLE_LENGTH_WEIGHTS)
    weights = list(_TITLE_LENGTH_WEIGHTS.values())
    chapters = ChapterSet.from_pairs(
        (
            start,
            " ".join(
                _words(rng, rng.choices(title_lengths, weights)[0], profile.vocabulary_size)
            ),
        )
        for start in starts
    )
    return Episode(
        metadata=EpisodeMetadata(
            episode_id=f"ep{index:04d}",
            title=" ".join(_words(rng, rng.randint(4, 8), profile.vocabulary_size)),
            description=" ".join(_words(rng, profile.description_words, profile.vocabulary_size)),
            show_id=f"show{index % 20:02d}",
        ),
        transcript=Transcript(tuple(sentences)),
        reference_chapters=chapters,
    )


def make_corpus(
    n_episodes: int, seed: int = 0, profile: SyntheticProfile = DEFAULT_PROFILE
) -> list[Episode]:
    """Generate a deterministic corpus following the profile."""
    rng = random.Random(seed)
    return [_make_episode(rng, i, profile) for i in range(n_episodes)]


def make_uniform_corpus(
    n_episodes: int,
    n_segments: int,
    segment_sentences: int,
    words_per_sentence: int = 10,
    seed: int = 0,
) -> list[Episode]:
    """Corpus where every reference segment has exactly the same length."""
    rng = random.Random(seed)
    episodes = []
    for index in range(n_episodes):
        n_sentences = n_segments * segment_sentences
        sentences = tuple(
            Sentence(" ".join(_words(rng, words_per_sentence, 2000)) + ".")
            for _ in range(n_sentences)
        )
        chapters = ChapterSet.from_pairs(
            (i * segment_sentences, " ".join(_words(rng, 3, 2000)))
            for i in range(n_segments)
        )
        episodes.append(
            Episode(
                metadata=EpisodeMetadata(
                    episode_id=f"uni{index:04d}",
                    title="uniform fixture",
                    description="synthetic uniform-segment episode",
                ),
                transcript=Transcript(sentences),
                reference_chapters=chapters,
            )
        )
    return episodes
