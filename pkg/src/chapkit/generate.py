"""Generator contract and the three built-in implementations.

A generator turns one rendered chunk input into a chapter string in the
output grammar. The pipeline never trusts that the string is well formed;
``promptfmt.parse_output`` handles deviations.

Implementations:

* OracleGenerator replays reference chapters (exact upper bound; the
  round-trip test of the whole pipeline).
* CohesionGenerator is an unsupervised lexical-cohesion baseline: cosine
  similarity between adjacent sentence blocks, boundaries at deep valleys,
  TF-IDF keyword titles.
* RemoteGenerator speaks a small JSON-over-HTTP protocol to any LLM
  endpoint, with retries and bounded concurrency. Cassette wrappers make
  remote runs recordable and replayable so tests never need network access.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import threading
import time
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from chapkit.corpus import ChapterSet, Episode, Sentence
from chapkit.promptfmt import SENTINEL, chapters_in_range, render_target, sanitize_title
from chapkit.textutil import STOPWORDS, analyze, raw_tokens

logger = logging.getLogger(__name__)


class GenerationError(RuntimeError):
    """A generator could not produce output for a request."""


class RemoteGenerationError(GenerationError):
    """Remote transport failed after exhausting retries."""


@dataclass(frozen=True)
class GeneratorRequest:
    """One chunk's rendered input plus the sentence-index range it covers.

    ``episode_id`` identifies the episode so stateless generators (oracle,
    cassettes) can key their lookups without holding per-episode state.
    """

    input_text: str
    valid_range: tuple[int, int]
    episode_id: str = ""


class Generator(Protocol):
    def generate(self, request: GeneratorRequest) -> str: ...


class OracleGenerator:
    """Replays the reference chapters that fall inside each chunk."""

    def __init__(self, episodes: Iterable[Episode]):
        self._references: dict[str, ChapterSet] = {}
        for episode in episodes:
            if episode.reference_chapters is None:
                raise ValueError(
                    f"episode {episode.episode_id} has no reference chapters"
                )
            self._references[episode.episode_id] = episode.reference_chapters

    def generate(self, request: GeneratorRequest) -> str:
        reference = self._references.get(request.episode_id)
        if reference is None:
            raise GenerationError(f"no reference chapters for {request.episode_id!r}")
        return render_target(chapters_in_range(reference, request.valid_range))


@dataclass(frozen=True)
class CohesionParams:
    """Knobs for the lexical-cohesion baseline.

    Defaults target segment lengths around the production profile; they are
    tunable, not prescribed.
    """

    block_size: int = 10
    smoothing_width: int = 2
    boundary_depth_cutoff: float = 0.5
    min_segment_sentences: int = 5

    def __post_init__(self):
        if self.block_size <= 0 or self.smoothing_width <= 0:
            raise ValueError("block_size and smoothing_width must be positive")
        if not 0 < self.boundary_depth_cutoff <= 3:
            raise ValueError("boundary_depth_cutoff must be in (0, 3]")
        if self.min_segment_sentences <= 0:
            raise ValueError("min_segment_sentences must be positive")


def _tf_vector(sentences: Sequence[Sentence]) -> Counter:
    counts: Counter = Counter()
    for s in sentences:
        counts.update(analyze(s.text))
    return counts


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b[term] for term, count in a.items())
    if dot == 0:
        return 0.0
    norm_a = math.sqrt(sum(c * c for c in a.values()))
    norm_b = math.sqrt(sum(c * c for c in b.values()))
    return dot / (norm_a * norm_b)


def _depth_scores(scores: Sequence[float]) -> list[float]:
    """TextTiling-style valley depth: climb to the nearest peak on each side."""
    depths = []
    for i, s in enumerate(scores):
        left = s
        for j in range(i - 1, -1, -1):
            if scores[j] >= left:
                left = scores[j]
            else:
                break
        right = s
        for j in range(i + 1, len(scores)):
            if scores[j] >= right:
                right = scores[j]
            else:
                break
        depths.append((left - s) + (right - s))
    return depths


def _is_valley(scores: Sequence[float], i: int) -> bool:
    left_ok = i == 0 or scores[i] <= scores[i - 1]
    right_ok = i == len(scores) - 1 or scores[i] <= scores[i + 1]
    return left_ok and right_ok


def cohesion_boundaries(
    sentences: Sequence[Sentence], params: CohesionParams = CohesionParams()
) -> list[int]:
    """Boundary positions (index of the first sentence after each gap).

    Cosine similarity of term-frequency vectors between the blocks on each
    side of every gap, smoothed with a centered moving average; valleys
    (local minima of the smoothed curve) whose depth exceeds
    mean + cutoff * std become boundaries, and boundaries closer than
    ``min_segment_sentences`` are merged keeping the deeper valley. Fewer
    than 2 * block_size sentences yield no boundaries.
    """
    n = len(sentences)
    if n < 2 * params.block_size:
        return []
    sims = []
    for gap in range(1, n):
        left = sentences[max(0, gap - params.block_size) : gap]
        right = sentences[gap : gap + params.block_size]
        sims.append(_cosine(_tf_vector(left), _tf_vector(right)))

    w = params.smoothing_width
    smoothed = [
        sum(sims[max(0, i - w) : i + w + 1]) / len(sims[max(0, i - w) : i + w + 1])
        for i in range(len(sims))
    ]
    depths = _depth_scores(smoothed)
    mean = sum(depths) / len(depths)
    std = math.sqrt(sum((d - mean) ** 2 for d in depths) / len(depths))
    threshold = mean + params.boundary_depth_cutoff * std
    candidates = [
        (i + 1, depths[i])
        for i in range(len(depths))
        if depths[i] > threshold and _is_valley(smoothed, i)
    ]

    merged: list[tuple[int, float]] = []
    for gap, depth in candidates:
        if merged and gap - merged[-1][0] < params.min_segment_sentences:
            if depth > merged[-1][1]:
                merged[-1] = (gap, depth)
        else:
            merged.append((gap, depth))
    return [gap for gap, _ in merged]


def keyword_title(
    sentences: Sequence[Sentence],
    context_sentences: Sequence[Sentence] | None = None,
    max_words: int = 6,
) -> str:
    """Extractive title: top TF-IDF terms of a segment, in document order.

    TF is counted over the segment; IDF over ``context_sentences`` (the
    surrounding episode text; defaults to the segment itself), with
    idf = ln(n_context / df) and unseen terms treated as df = 1. Ties are
    broken by first occurrence. Original casing of the first occurrence is
    kept; stopwords are excluded. An all-stopword segment falls back to
    "Chapter".
    """
    if not sentences:
        raise ValueError("segment is empty")
    if context_sentences is None:
        context_sentences = sentences

    first_seen: dict[str, int] = {}
    casing: dict[str, str] = {}
    tf: Counter = Counter()
    position = 0
    for s in sentences:
        for raw in raw_tokens(s.text):
            term = raw.lower()
            position += 1
            if term in STOPWORDS:
                continue
            tf[term] += 1
            if term not in first_seen:
                first_seen[term] = position
                casing[term] = raw
    if not tf:
        return "Chapter"

    n_context = len(context_sentences)
    df: Counter = Counter()
    for s in context_sentences:
        df.update(set(analyze(s.text)))
    scores = {
        term: count * math.log(n_context / max(1, df[term])) for term, count in tf.items()
    }
    ranked = sorted(scores, key=lambda t: (-scores[t], first_seen[t]))[:max_words]
    ranked.sort(key=lambda t: first_seen[t])
    return " ".join(casing[t] for t in ranked)


_INDEXED_LINE_RE = re.compile(r"^(\d+): (.*)$")


def _sentences_from_input(input_text: str) -> list[tuple[int, str]]:
    """Recover the indexed sentences embedded in a rendered input."""
    pairs = []
    for line in input_text.splitlines():
        match = _INDEXED_LINE_RE.match(line)
        if match:
            pairs.append((int(match.group(1)), match.group(2)))
    return pairs


class CohesionGenerator:
    """Unsupervised baseline: cohesion valleys for boundaries, TF-IDF titles.

    Works purely from the rendered input text, like any other generator. A
    chapter is opened at the chunk start only when the chunk begins the
    episode (global index 0); later chunks are assumed to continue the
    previous chapter until the first valley.
    """

    def __init__(self, params: CohesionParams = CohesionParams(), title_words: int = 6):
        self.params = params
        self.title_words = title_words

    def generate(self, request: GeneratorRequest) -> str:
        pairs = _sentences_from_input(request.input_text)
        if not pairs:
            return SENTINEL
        sentences = [Sentence(text) for _, text in pairs]
        offset = pairs[0][0]
        boundaries = cohesion_boundaries(sentences, self.params)
        starts = ([0] if offset == 0 else []) + boundaries
        if not starts:
            return SENTINEL
        entries = []
        bounds = starts + [len(sentences)]
        for seg_start, seg_end in zip(bounds, bounds[1:]):
            title = keyword_title(
                sentences[seg_start:seg_end], sentences, max_words=self.title_words
            )
            entries.append(f"{seg_start + offset} := {sanitize_title(title)}")
        return " | ".join(entries)


DEFAULT_REMOTE_INSTRUCTION = (
    "Divide the transcript below into non-overlapping chapters. Return a JSON "
    'array of objects with keys "start_sentence_id" (the integer sentence '
    'number copied from the numbering in the input) and "title" (a short '
    "chapter title). Return [] if no chapter starts in this text."
)


@dataclass(frozen=True)
class RemoteConfig:
    """Plain HTTP/JSON endpoint settings for a hosted text generator.

    ``auth_token_env`` names an environment variable holding a bearer token;
    ``model`` is passed through opaquely.
    """

    endpoint: str
    auth_token_env: str = ""
    timeout_s: float = 30.0
    max_concurrent: int = 4
    model: str = ""
    instruction: str = DEFAULT_REMOTE_INSTRUCTION
    max_attempts: int = 3
    backoff_base_s: float = 1.0


Transport = Callable[[str, bytes, dict, float], str]


def _http_post_json(url: str, body: bytes, headers: dict, timeout_s: float) -> str:
    req = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=timeout_s) as resp:
            return resp.read().decode("utf-8")
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise RemoteGenerationError(f"POST {url} failed: {exc}") from exc


def _entries_from_response(text: str) -> list[tuple[int, str]] | None:
    """Decode the remote JSON protocol; None signals an unusable response."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError:
        return None
    if not isinstance(payload, list):
        return None
    entries = []
    for item in payload:
        if (
            isinstance(item, dict)
            and isinstance(item.get("start_sentence_id"), int)
            and isinstance(item.get("title"), str)
        ):
            entries.append((item["start_sentence_id"], item["title"]))
        else:
            logger.warning("skipping malformed response item: %r", item)
    return entries


def remote_chapterize(
    request: GeneratorRequest,
    config: RemoteConfig,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Call the endpoint and convert its JSON reply to the output grammar.

    Transport failures are retried with exponential backoff and raise
    RemoteGenerationError once attempts are exhausted. A malformed JSON body
    is not retried: it degrades to an empty, non-sentinel output that the
    parser reports with a warning.
    """
    transport = transport or _http_post_json
    headers = {"Content-Type": "application/json"}
    if config.auth_token_env:
        token = os.environ.get(config.auth_token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
    body = json.dumps(
        {
            "model": config.model,
            "instruction": config.instruction,
            "input": request.input_text,
        }
    ).encode("utf-8")

    last_error: RemoteGenerationError | None = None
    for attempt in range(config.max_attempts):
        if attempt:
            sleep(config.backoff_base_s * 2 ** (attempt - 1))
        try:
            response = transport(config.endpoint, body, headers, config.timeout_s)
            break
        except RemoteGenerationError as exc:
            logger.warning("attempt %d/%d failed: %s", attempt + 1, config.max_attempts, exc)
            last_error = exc
    else:
        raise last_error  # type: ignore[misc]

    entries = _entries_from_response(response)
    if entries is None:
        logger.warning(
            "unusable response for %s %s; emitting empty output",
            request.episode_id,
            request.valid_range,
        )
        return ""
    if not entries:
        return SENTINEL
    entries.sort(key=lambda e: e[0])
    return " | ".join(f"{idx} := {sanitize_title(title)}" for idx, title in entries)


class RemoteGenerator:
    """Generator backed by a remote endpoint, bounded to max_concurrent calls."""

    def __init__(self, config: RemoteConfig, transport: Transport | None = None):
        self.config = config
        self._transport = transport
        self._semaphore = threading.BoundedSemaphore(config.max_concurrent)

    def generate(self, request: GeneratorRequest) -> str:
        with self._semaphore:
            return remote_chapterize(request, self.config, transport=self._transport)


def _cassette_key(request: GeneratorRequest) -> str:
    digest = hashlib.sha256(request.input_text.encode("utf-8")).hexdigest()
    return f"{request.episode_id}:{request.valid_range[0]}-{request.valid_range[1]}:{digest}"


class CassetteRecorder:
    """Pass-through generator that appends (request key, response) to a file."""

    def __init__(self, inner: Generator, path: str | Path):
        self._inner = inner
        self._path = Path(path)
        self._lock = threading.Lock()

    def generate(self, request: GeneratorRequest) -> str:
        response = self._inner.generate(request)
        record = {
            "key": _cassette_key(request),
            "episode_id": request.episode_id,
            "valid_range": list(request.valid_range),
            "response": response,
        }
        with self._lock, open(self._path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        return response


class CassetteReplayer:
    """Generator that replays recorded responses; no network, no credentials."""

    def __init__(self, path: str | Path):
        self._responses: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    record = json.loads(line)
                    self._responses[record["key"]] = record["response"]

    def generate(self, request: GeneratorRequest) -> str:
        key = _cassette_key(request)
        if key not in self._responses:
            raise GenerationError(f"cassette has no response for {key}")
        return self._responses[key]
