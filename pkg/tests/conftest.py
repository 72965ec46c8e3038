import pytest

from chapkit.corpus import (
    ChapterSet,
    Episode,
    EpisodeMetadata,
    Sentence,
    Transcript,
)
from chapkit.synthetic import make_corpus


def build_episode(
    texts,
    chapters=None,
    *,
    episode_id="ep1",
    title="Test Episode",
    description="",
    show_id=None,
    timestamps=False,
    words_per_second=2.0,
):
    """Small hand-rolled episode for unit tests."""
    sentences = []
    clock = 0.0
    for text in texts:
        if timestamps:
            duration = len(text.split()) / words_per_second
            sentences.append(Sentence(text, start_s=clock, end_s=clock + duration))
            clock += duration
        else:
            sentences.append(Sentence(text))
    reference = ChapterSet.from_pairs(chapters) if chapters is not None else None
    return Episode(
        metadata=EpisodeMetadata(episode_id, title, description, show_id),
        transcript=Transcript(tuple(sentences)),
        reference_chapters=reference,
    )


def sentences_of(n, words_each=5, word="tok"):
    """n sentences of a fixed word count."""
    return [" ".join(f"{word}{i}_{j}" for j in range(words_each)) for i in range(n)]


@pytest.fixture(scope="session")
def table1_corpus():
    """100 synthetic episodes following the production-catalog profile."""
    return make_corpus(100, seed=0)
