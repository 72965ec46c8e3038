"""Episode-level orchestration: chunk, render, generate, parse, stitch, sanitize.

Chunks are processed strictly left to right within an episode because the
dynamic context of chunk i+1 depends on the titles predicted up to chunk i.
Parallelism is across episodes only.
"""

from __future__ import annotations

import functools
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from chapkit.chunking import ChunkBudget, chunk_transcript, render_indexed_sentences
from chapkit.corpus import ChapterSet, Episode
from chapkit.generate import GenerationError, Generator, GeneratorRequest
from chapkit.promptfmt import (
    ChunkPrediction,
    DynamicContext,
    StaticContext,
    parse_output,
    render_input,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    budget: ChunkBudget = ChunkBudget()
    use_static_context: bool = True
    use_dynamic_context: bool = True
    blocklist_path: str | None = None


@dataclass
class EpisodeResult:
    episode_id: str
    chapters: ChapterSet
    warnings: list[str]


def stitch(predictions: Sequence[ChunkPrediction]) -> ChapterSet:
    """Merge per-chunk predictions into one episode chapter list.

    Entries are concatenated in chunk order; duplicate start indices keep
    the earliest chunk's entry; the result is sorted by start index.
    """
    merged: list[tuple[int, str]] = []
    seen: set[int] = set()
    for prediction in predictions:
        for idx, title in prediction.entries:
            if idx in seen:
                continue
            seen.add(idx)
            merged.append((idx, title))
    merged.sort(key=lambda entry: entry[0])
    return ChapterSet.from_pairs(merged)


@functools.lru_cache(maxsize=None)
def load_blocklist(path: str) -> tuple[str, ...]:
    """One lowercase term per line; blank lines and '#' comments ignored."""
    terms = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            term = line.strip().lower()
            if term and not term.startswith("#"):
                terms.append(term)
    return tuple(terms)


def sanitize_titles(
    chapters: ChapterSet, blocklist: Sequence[str]
) -> tuple[ChapterSet, list[tuple[int, str]]]:
    """Replace titles containing a blocklisted term with "Chapter <ordinal>".

    Matching is case-insensitive on word boundaries. Boundaries are kept
    (removing a chapter would break segmentation coverage); the returned
    removals list holds (start_index, original_title) pairs.
    """
    if not blocklist:
        return chapters, []
    patterns = [re.compile(rf"\b{re.escape(term.lower())}\b") for term in blocklist]
    replaced = []
    removals: list[tuple[int, str]] = []
    for ordinal, chapter in enumerate(chapters, start=1):
        lowered = chapter.title.lower()
        if any(p.search(lowered) for p in patterns):
            removals.append((chapter.start_index, chapter.title))
            replaced.append((chapter.start_index, f"Chapter {ordinal}"))
        else:
            replaced.append((chapter.start_index, chapter.title))
    return ChapterSet.from_pairs(replaced), removals


def chapterize_episode(
    episode: Episode,
    generator: Generator,
    config: PipelineConfig = PipelineConfig(),
    blocklist: Sequence[str] | None = None,
) -> tuple[ChapterSet, list[str]]:
    """Chapterize one episode, returning the chapter set and any warnings.

    When the generator yields no chapters at all, a single fallback chapter
    (start 0, titled with the episode title) is emitted so the episode is
    always displayable.
    """
    if blocklist is None and config.blocklist_path:
        blocklist = load_blocklist(config.blocklist_path)

    meta = episode.metadata
    if config.use_static_context:
        static_ctx = StaticContext(meta.title, meta.description)
    else:
        static_ctx = StaticContext("", "")

    warnings: list[str] = []
    predictions: list[ChunkPrediction] = []
    previous_titles: list[str] = []
    for chunk in chunk_transcript(episode.transcript, config.budget):
        valid_range = (chunk.first_index, chunk.last_index)
        dynamic_ctx = DynamicContext(
            tuple(previous_titles) if config.use_dynamic_context else ()
        )
        input_text = render_input(
            render_indexed_sentences(episode.transcript, chunk),
            static_ctx,
            dynamic_ctx,
            config.budget,
        )
        raw = generator.generate(
            GeneratorRequest(input_text, valid_range, meta.episode_id)
        )
        prediction, parse_warnings = parse_output(raw, valid_range)
        warnings.extend(
            f"chunk [{valid_range[0]}..{valid_range[1]}]: {w}" for w in parse_warnings
        )
        predictions.append(prediction)
        previous_titles.extend(prediction.titles)

    chapters = stitch(predictions)
    if not len(chapters):
        fallback_title = " ".join(meta.title.split()) or "Chapter 1"
        chapters = ChapterSet.from_pairs([(0, fallback_title)])
        warnings.append("no chapters predicted; emitted fallback chapter")
    if blocklist:
        chapters, removals = sanitize_titles(chapters, blocklist)
        warnings.extend(
            f"sanitized title at sentence {idx}: {title!r}" for idx, title in removals
        )
    return chapters, warnings


def chapterize_corpus(
    episodes: Sequence[Episode],
    generator: Generator,
    config: PipelineConfig = PipelineConfig(),
    workers: int = 1,
) -> tuple[list[EpisodeResult], list[tuple[str, str]]]:
    """Chapterize a corpus, in input order, with episode-level parallelism.

    Returns (results, failures); a failed episode appears only in failures,
    as (episode_id, error message).
    """
    blocklist = load_blocklist(config.blocklist_path) if config.blocklist_path else None

    def run(episode: Episode) -> EpisodeResult:
        chapters, warnings = chapterize_episode(episode, generator, config, blocklist)
        return EpisodeResult(episode.episode_id, chapters, warnings)

    results: list[EpisodeResult] = []
    failures: list[tuple[str, str]] = []
    if workers <= 1:
        outcomes = []
        for episode in episodes:
            try:
                outcomes.append(run(episode))
            except GenerationError as exc:
                outcomes.append((episode.episode_id, str(exc)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run, episode) for episode in episodes]
            outcomes = []
            for episode, future in zip(episodes, futures):
                try:
                    outcomes.append(future.result())
                except GenerationError as exc:
                    outcomes.append((episode.episode_id, str(exc)))
    for outcome in outcomes:
        if isinstance(outcome, EpisodeResult):
            results.append(outcome)
        else:
            logger.error("episode %s failed: %s", outcome[0], outcome[1])
            failures.append(outcome)
    return results, failures


def write_predictions(
    path: str | Path, results: Sequence[EpisodeResult], episodes: Mapping[str, Episode]
) -> None:
    """Write predictions as JSONL; start_s is copied from the start sentence
    of each chapter when the transcript carries timestamps."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for result in results:
            episode = episodes.get(result.episode_id)
            chapters = []
            for chapter in result.chapters:
                entry: dict = {"start_index": chapter.start_index, "title": chapter.title}
                if episode is not None:
                    start_s = episode.transcript.sentences[chapter.start_index].start_s
                    if start_s is not None:
                        entry["start_s"] = start_s
                chapters.append(entry)
            fh.write(
                json.dumps(
                    {
                        "episode_id": result.episode_id,
                        "chapters": chapters,
                        "warnings": result.warnings,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_predictions(path: str | Path) -> dict[str, ChapterSet]:
    """Read a predictions JSONL file back into chapter sets by episode id."""
    predictions: dict[str, ChapterSet] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            predictions[obj["episode_id"]] = ChapterSet.from_pairs(
                (c["start_index"], c["title"]) for c in obj["chapters"]
            )
    return predictions
