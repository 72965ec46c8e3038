"""Domain types, JSONL corpus I/O, dataset filters, and descriptive stats.

Corpus files hold one JSON object per line:

    {"episode_id": str, "show_id"?: str, "title": str, "description": str,
     "sentences": [{"text": str, "start_s"?: float, "end_s"?: float}, ...],
     "chapters"?: [{"start_index": int, "title": str}, ...]}

UTF-8, LF line endings. ``load_corpus`` / ``save_corpus`` round-trip these
fields exactly.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from chapkit.chunking import count_words


class CorpusError(ValueError):
    """Raised for schema violations and broken episode invariants."""


@dataclass(frozen=True)
class Sentence:
    """One transcript sentence; the atomic unit of segmentation.

    ``word_count`` is derived from ``text`` when omitted and must equal the
    whitespace-token count when given explicitly.
    """

    text: str
    word_count: int = -1
    start_s: float | None = None
    end_s: float | None = None

    def __post_init__(self):
        if self.word_count < 0:
            object.__setattr__(self, "word_count", count_words(self.text))


@dataclass(frozen=True)
class Transcript:
    sentences: tuple[Sentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def word_count(self) -> int:
        return sum(s.word_count for s in self.sentences)


@dataclass(frozen=True)
class EpisodeMetadata:
    episode_id: str
    title: str
    description: str
    show_id: str | None = None


@dataclass(frozen=True)
class Chapter:
    """A chapter start: the 0-based index of its first sentence plus a title."""

    start_index: int
    title: str


@dataclass(frozen=True)
class ChapterSet:
    """Ordered chapters with strictly increasing start indices.

    Each chapter implicitly ends where the next begins; the last one ends at
    the transcript end.
    """

    chapters: tuple[Chapter, ...]

    def __len__(self) -> int:
        return len(self.chapters)

    def __iter__(self) -> Iterator[Chapter]:
        return iter(self.chapters)

    def __getitem__(self, i: int) -> Chapter:
        return self.chapters[i]

    @property
    def starts(self) -> list[int]:
        return [c.start_index for c in self.chapters]

    @property
    def titles(self) -> list[str]:
        return [c.title for c in self.chapters]

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, str]]) -> ChapterSet:
        return ChapterSet(tuple(Chapter(i, t) for i, t in pairs))


@dataclass(frozen=True)
class Episode:
    metadata: EpisodeMetadata
    transcript: Transcript
    reference_chapters: ChapterSet | None = None

    @property
    def episode_id(self) -> str:
        return self.metadata.episode_id


def validate_episode(episode: Episode) -> None:
    """Check all episode invariants; raise CorpusError naming the first violation."""
    eid = episode.metadata.episode_id
    if not eid:
        raise CorpusError("episode_id must be non-empty")
    sentences = episode.transcript.sentences
    if not sentences:
        raise CorpusError(f"episode {eid}: transcript is empty")
    last_start = None
    for i, s in enumerate(sentences):
        if not s.text.strip():
            raise CorpusError(f"episode {eid}: sentence {i} is empty")
        if "\n" in s.text:
            raise CorpusError(f"episode {eid}: sentence {i} contains a newline")
        if s.word_count != count_words(s.text):
            raise CorpusError(
                f"episode {eid}: sentence {i} word_count {s.word_count} "
                f"!= {count_words(s.text)}"
            )
        if s.start_s is not None and s.start_s < 0:
            raise CorpusError(f"episode {eid}: sentence {i} start_s is negative")
        if s.end_s is not None:
            if s.start_s is None:
                raise CorpusError(f"episode {eid}: sentence {i} has end_s without start_s")
            if s.end_s < s.start_s:
                raise CorpusError(f"episode {eid}: sentence {i} end_s precedes start_s")
        if s.start_s is not None:
            if last_start is not None and s.start_s < last_start:
                raise CorpusError(f"episode {eid}: timestamps decrease at sentence {i}")
            last_start = s.start_s
    if episode.reference_chapters is not None:
        validate_chapters(episode.reference_chapters, len(sentences), context=f"episode {eid}")


def validate_chapters(chapters: ChapterSet, n_sentences: int, context: str = "chapters") -> None:
    prev = -1
    for pos, chapter in enumerate(chapters):
        if not chapter.title.strip():
            raise CorpusError(f"{context}: chapter {pos} title is empty")
        if not 0 <= chapter.start_index < n_sentences:
            raise CorpusError(
                f"{context}: chapter {pos} start_index {chapter.start_index} "
                f"outside transcript of {n_sentences} sentences"
            )
        if chapter.start_index <= prev:
            raise CorpusError(f"{context}: chapter starts not strictly increasing at {pos}")
        prev = chapter.start_index


def _episode_from_obj(obj: dict, lineno: int) -> Episode:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: expected a JSON object")
    for key in ("episode_id", "title", "description", "sentences"):
        if key not in obj:
            raise CorpusError(f"line {lineno}: missing field {key}")
    sentences = []
    for s in obj["sentences"]:
        if "text" not in s:
            raise CorpusError(f"line {lineno}: missing field text in sentence")
        sentences.append(Sentence(text=s["text"], start_s=s.get("start_s"), end_s=s.get("end_s")))
    chapters = None
    if obj.get("chapters") is not None:
        pairs = []
        for c in obj["chapters"]:
            for key in ("start_index", "title"):
                if key not in c:
                    raise CorpusError(f"line {lineno}: missing field {key} in chapter")
            pairs.append((c["start_index"], c["title"]))
        chapters = ChapterSet.from_pairs(pairs)
    return Episode(
        metadata=EpisodeMetadata(
            episode_id=obj["episode_id"],
            title=obj["title"],
            description=obj["description"],
            show_id=obj.get("show_id"),
        ),
        transcript=Transcript(tuple(sentences)),
        reference_chapters=chapters,
    )


def load_corpus(path: str | Path) -> list[Episode]:
    """Read a JSONL corpus, validating every episode.

    Raises CorpusError naming the line number for malformed JSON or missing
    fields, and naming the episode and invariant for semantic violations.
    """
    episodes: list[Episode] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON: {exc}") from exc
            episode = _episode_from_obj(obj, lineno)
            validate_episode(episode)
            if episode.episode_id in seen_ids:
                raise CorpusError(
                    f"line {lineno}: duplicate episode_id {episode.episode_id}"
                )
            seen_ids.add(episode.episode_id)
            episodes.append(episode)
    return episodes


def episode_to_obj(episode: Episode) -> dict:
    obj: dict = {
        "episode_id": episode.metadata.episode_id,
        "title": episode.metadata.title,
        "description": episode.metadata.description,
    }
    if episode.metadata.show_id is not None:
        obj["show_id"] = episode.metadata.show_id
    sentences = []
    for s in episode.transcript.sentences:
        entry: dict = {"text": s.text}
        if s.start_s is not None:
            entry["start_s"] = s.start_s
        if s.end_s is not None:
            entry["end_s"] = s.end_s
        sentences.append(entry)
    obj["sentences"] = sentences
    if episode.reference_chapters is not None:
        obj["chapters"] = [
            {"start_index": c.start_index, "title": c.title}
            for c in episode.reference_chapters
        ]
    return obj


def save_corpus(path: str | Path, episodes: Iterable[Episode]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for episode in episodes:
            fh.write(json.dumps(episode_to_obj(episode), ensure_ascii=False))
            fh.write("\n")


@dataclass(frozen=True)
class FilterConfig:
    """Dataset filters: chapter durations in [min, max] seconds and titles
    strictly shorter than ``max_title_words`` words."""

    min_chapter_s: float = 30.0
    max_chapter_s: float = 1800.0
    max_title_words: int = 15


@dataclass(frozen=True)
class FilterResult:
    passed: bool
    violations: tuple[str, ...]
    notes: tuple[str, ...]


def chapter_durations(episode: Episode) -> list[float | None]:
    """Per-chapter durations in seconds, None where timestamps are missing.

    A chapter lasts from its first sentence's start to the next chapter's
    first sentence's start; the last chapter ends at the final sentence's end.
    """
    chapters = episode.reference_chapters
    if chapters is None:
        raise ValueError("episode has no reference chapters")
    sentences = episode.transcript.sentences
    durations: list[float | None] = []
    for pos, chapter in enumerate(chapters):
        begin = sentences[chapter.start_index].start_s
        if pos + 1 < len(chapters):
            end = sentences[chapters[pos + 1].start_index].start_s
        else:
            end = sentences[-1].end_s
        if begin is None or end is None:
            durations.append(None)
        else:
            durations.append(end - begin)
    return durations


def passes_filters(episode: Episode, filters: FilterConfig = FilterConfig()) -> FilterResult:
    """Apply the duration and title-length filters to one episode.

    Duration checks that cannot be evaluated (missing timestamps) are
    recorded as notes, never silently passed.
    """
    chapters = episode.reference_chapters
    if chapters is None:
        raise ValueError("episode has no reference chapters")
    violations: list[str] = []
    notes: list[str] = []
    unevaluable = 0
    for pos, duration in enumerate(chapter_durations(episode)):
        if duration is None:
            unevaluable += 1
            continue
        if not filters.min_chapter_s <= duration <= filters.max_chapter_s:
            violations.append(
                f"chapter {pos}: duration {duration:.1f}s outside "
                f"[{filters.min_chapter_s:g}, {filters.max_chapter_s:g}]"
            )
    if unevaluable:
        notes.append(f"duration not evaluable for {unevaluable} chapter(s)")
    for pos, chapter in enumerate(chapters):
        n = count_words(chapter.title)
        if n >= filters.max_title_words:
            violations.append(
                f"chapter {pos}: title has {n} words "
                f"(must be shorter than {filters.max_title_words})"
            )
    return FilterResult(not violations, tuple(violations), tuple(notes))


def segment_lengths(chapters: ChapterSet, n_sentences: int) -> list[int]:
    """Sentence count of each chapter's span; the last span ends at n_sentences."""
    starts = chapters.starts
    return [
        (starts[i + 1] if i + 1 < len(starts) else n_sentences) - starts[i]
        for i in range(len(starts))
    ]


@dataclass(frozen=True)
class CorpusStats:
    n_episodes: int
    n_chapters: int
    avg_chapters: float
    std_chapters: float
    avg_segment_sentences: float
    std_segment_sentences: float
    avg_title_words: float
    std_title_words: float
    avg_doc_words: float


def corpus_stats(corpus: Sequence[Episode]) -> CorpusStats:
    """Means and population standard deviations of the reference chaptering.

    Chapter counts are per episode; segment lengths and title word counts
    are pooled over all reference chapters of the corpus.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    chapter_counts: list[int] = []
    seg_lengths: list[int] = []
    title_words: list[int] = []
    doc_words: list[int] = []
    for episode in corpus:
        if episode.reference_chapters is None:
            raise ValueError(f"episode {episode.episode_id} has no reference chapters")
        chapter_counts.append(len(episode.reference_chapters))
        seg_lengths.extend(
            segment_lengths(episode.reference_chapters, len(episode.transcript))
        )
        title_words.extend(count_words(t) for t in episode.reference_chapters.titles)
        doc_words.append(episode.transcript.word_count)
    return CorpusStats(
        n_episodes=len(corpus),
        n_chapters=sum(chapter_counts),
        avg_chapters=statistics.fmean(chapter_counts),
        std_chapters=statistics.pstdev(chapter_counts),
        avg_segment_sentences=statistics.fmean(seg_lengths) if seg_lengths else 0.0,
        std_segment_sentences=statistics.pstdev(seg_lengths) if seg_lengths else 0.0,
        avg_title_words=statistics.fmean(title_words) if title_words else 0.0,
        std_title_words=statistics.pstdev(title_words) if title_words else 0.0,
        avg_doc_words=statistics.fmean(doc_words),
    )


def split_corpus(
    episodes: Sequence[Episode],
    fractions: Sequence[float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> list[list[Episode]]:
    """Seeded random partition of a corpus into len(fractions) parts."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    order = list(episodes)
    random.Random(seed).shuffle(order)
    parts: list[list[Episode]] = []
    start = 0
    for i, frac in enumerate(fractions):
        if i == len(fractions) - 1:
            end = len(order)
        else:
            end = start + round(frac * len(order))
        parts.append(order[start:end])
        start = end
    return parts
