"""Intrinsic evaluation: segmentation, title, and consistency metrics.

Segmentation is scored with WindowDiff over boundary sequences. Titles are
scored after an asymmetric sentence-overlap alignment between reference and
predicted chapters: each chapter in one set is paired with the maximal-
overlap chapter in the other set, independently in both directions. Title
pairs feed LCS-based ROUGE-L F1 and embedding cosine precision/recall whose
geometric mean is the embedding F1. Missing values (e.g. no predicted
chapters) are reported as None, never as 0.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import statistics
import urllib.request
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

from chapkit import _kernels
from chapkit.chunking import count_words
from chapkit.corpus import ChapterSet, Episode, segment_lengths

METRIC_FIELDS = (
    "windiff",
    "rougeL_f1_aligned",
    "emb_precision",
    "emb_recall",
    "emb_f1",
    "title_cv",
)


@dataclass(frozen=True)
class BoundarySeq:
    """Chapter boundaries as gap positions: a boundary at g separates
    sentences g-1 and g, so valid gaps are 1..n_sentences-1."""

    n_sentences: int
    boundaries: frozenset[int]

    def __post_init__(self):
        if self.n_sentences <= 0:
            raise ValueError("n_sentences must be positive")
        for g in self.boundaries:
            if not 1 <= g <= self.n_sentences - 1:
                raise ValueError(f"boundary {g} outside 1..{self.n_sentences - 1}")

    @staticmethod
    def from_chapters(chapters: ChapterSet, n_sentences: int) -> BoundarySeq:
        return BoundarySeq(
            n_sentences, frozenset(s for s in chapters.starts if s > 0)
        )


def window_diff(reference: BoundarySeq, hypothesis: BoundarySeq, k: int) -> float:
    """Fraction of k-wide sliding windows whose boundary counts disagree."""
    if reference.n_sentences != hypothesis.n_sentences:
        raise ValueError("sequences cover different transcript lengths")
    n = reference.n_sentences
    if not 1 <= k < n:
        raise ValueError(f"window size k={k} must satisfy 1 <= k < n={n}")
    disagreements = _kernels.count_window_disagreements(
        n, k, sorted(reference.boundaries), sorted(hypothesis.boundaries)
    )
    return disagreements / (n - k)


def estimate_k(corpus: Sequence[Episode]) -> int:
    """Half the mean reference segment length in sentences, at least 2."""
    lengths: list[int] = []
    for episode in corpus:
        if episode.reference_chapters is None:
            raise ValueError(f"episode {episode.episode_id} has no reference chapters")
        lengths.extend(segment_lengths(episode.reference_chapters, len(episode.transcript)))
    if not lengths:
        raise ValueError("no reference segments in corpus")
    return max(2, round(0.5 * statistics.fmean(lengths)))


@dataclass(frozen=True)
class Matches:
    """Title pairs (reference_title, predicted_title) from both alignment
    directions; all_matches is their multiset union."""

    pred_matches: tuple[tuple[str, str], ...]
    ref_matches: tuple[tuple[str, str], ...]

    @property
    def all_matches(self) -> tuple[tuple[str, str], ...]:
        return self.pred_matches + self.ref_matches


def _segments(chapters: ChapterSet, n_sentences: int) -> list[tuple[int, int]]:
    starts = chapters.starts
    return [
        (starts[i], starts[i + 1] if i + 1 < len(starts) else n_sentences)
        for i in range(len(starts))
    ]


def _best_overlap(segment: tuple[int, int], others: list[tuple[int, int]]) -> int:
    """Index of the maximal-overlap segment; ties go to the earlier one."""
    best, best_overlap = 0, -1
    for i, other in enumerate(others):
        overlap = max(0, min(segment[1], other[1]) - max(segment[0], other[0]))
        if overlap > best_overlap:
            best, best_overlap = i, overlap
    return best


def align_chapters(reference: ChapterSet, prediction: ChapterSet, n_sentences: int) -> Matches:
    """Asymmetric maximal-overlap alignment between two chapter sets.

    Every predicted chapter is paired with a reference chapter and vice
    versa; a direction with an empty opposite set contributes no pairs.
    """
    ref_segments = _segments(reference, n_sentences)
    pred_segments = _segments(prediction, n_sentences)
    pred_matches = []
    ref_matches = []
    if ref_segments and pred_segments:
        for j, segment in enumerate(pred_segments):
            i = _best_overlap(segment, ref_segments)
            pred_matches.append((reference[i].title, prediction[j].title))
        for i, segment in enumerate(ref_segments):
            j = _best_overlap(segment, pred_segments)
            ref_matches.append((reference[i].title, prediction[j].title))
    return Matches(tuple(pred_matches), tuple(ref_matches))


def _token_ids(a: list[str], b: list[str]) -> tuple[list[int], list[int]]:
    ids: dict[str, int] = {}
    return (
        [ids.setdefault(t, len(ids)) for t in a],
        [ids.setdefault(t, len(ids)) for t in b],
    )


def rouge_l_f1(reference: str, candidate: str) -> float:
    """LCS-based F1 over lowercased whitespace tokens.

    Precision divides by the candidate length, recall by the reference
    length; 0.0 when either side has no tokens.
    """
    ref_tokens = reference.lower().split()
    cand_tokens = candidate.lower().split()
    if not ref_tokens or not cand_tokens:
        return 0.0
    ref_ids, cand_ids = _token_ids(ref_tokens, cand_tokens)
    lcs = _kernels.lcs_length(ref_ids, cand_ids)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand_tokens)
    recall = lcs / len(ref_tokens)
    return 2 * precision * recall / (precision + recall)


def rouge1_f1(a: str, b: str) -> float:
    """Unigram-overlap F1 over lowercased whitespace tokens (clipped counts)."""
    tokens_a = a.lower().split()
    tokens_b = b.lower().split()
    if not tokens_a or not tokens_b:
        return 0.0
    counts_a: dict[str, int] = {}
    for t in tokens_a:
        counts_a[t] = counts_a.get(t, 0) + 1
    counts_b: dict[str, int] = {}
    for t in tokens_b:
        counts_b[t] = counts_b.get(t, 0) + 1
    overlap = sum(min(c, counts_b.get(t, 0)) for t, c in counts_a.items())
    if overlap == 0:
        return 0.0
    precision = overlap / len(tokens_b)
    recall = overlap / len(tokens_a)
    return 2 * precision * recall / (precision + recall)


def aligned_rouge_l(
    reference: ChapterSet, prediction: ChapterSet, n_sentences: int
) -> float | None:
    """Mean ROUGE-L F1 over the multiset union of both alignment directions.

    Pairs present in both directions count twice. None when no pairs exist.
    """
    matches = align_chapters(reference, prediction, n_sentences).all_matches
    if not matches:
        return None
    return sum(rouge_l_f1(ref, pred) for ref, pred in matches) / len(matches)


class Embedder(Protocol):
    def embed(self, title: str) -> np.ndarray: ...


class HashedBowEmbedder:
    """Deterministic hashed bag-of-words embedding (no model downloads).

    Lowercased whitespace tokens are hashed into a fixed number of buckets
    with a stable keyed hash; the count vector is L2-normalized.
    """

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def embed(self, title: str) -> np.ndarray:
        vector = np.zeros(self.dimension)
        for token in title.lower().split():
            vector[self.bucket(token)] += 1.0
        norm = float(np.linalg.norm(vector))
        return vector / norm if norm else vector

    def bucket(self, token: str) -> int:
        digest = hashlib.blake2s(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dimension


class RemoteEmbedder:
    """Adapter for an external embedding service.

    POSTs {"texts": [...]} and expects {"embeddings": [[...], ...]}; vectors
    are L2-normalized and cached per title so repeated calls stay
    deterministic within a run.
    """

    def __init__(self, endpoint: str, auth_token_env: str = "", timeout_s: float = 30.0):
        self.endpoint = endpoint
        self.auth_token_env = auth_token_env
        self.timeout_s = timeout_s
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, title: str) -> np.ndarray:
        if title in self._cache:
            return self._cache[title]
        headers = {"Content-Type": "application/json"}
        if self.auth_token_env:
            token = os.environ.get(self.auth_token_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(
            self.endpoint,
            data=json.dumps({"texts": [title]}).encode("utf-8"),
            headers=headers,
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        vector = np.asarray(payload["embeddings"][0], dtype=float)
        norm = float(np.linalg.norm(vector))
        if norm:
            vector = vector / norm
        self._cache[title] = vector
        return vector


def _cosine_unit(a: np.ndarray, b: np.ndarray) -> float:
    # cosine of identical vectors is 1 by definition; the float dot product
    # can drift by an ulp, which matters for exact-equality acceptance checks
    if np.array_equal(a, b):
        return 1.0 if np.any(a) else 0.0
    return min(1.0, max(0.0, float(np.dot(a, b))))


def embedding_prf(
    reference: ChapterSet,
    prediction: ChapterSet,
    embedder: Embedder,
    n_sentences: int,
) -> tuple[float | None, float | None, float | None]:
    """(precision, recall, geometric-mean F1) of title embedding cosines.

    Precision averages over predicted-side matches, recall over the
    reference side; negative cosines are floored at 0 so the geometric mean
    stays defined. A direction with no pairs yields None.
    """
    matches = align_chapters(reference, prediction, n_sentences)
    cache: dict[str, np.ndarray] = {}

    def vec(title: str) -> np.ndarray:
        if title not in cache:
            cache[title] = embedder.embed(title)
        return cache[title]

    precision = recall = None
    if matches.pred_matches:
        precision = sum(
            _cosine_unit(vec(r), vec(p)) for r, p in matches.pred_matches
        ) / len(matches.pred_matches)
    if matches.ref_matches:
        recall = sum(
            _cosine_unit(vec(r), vec(p)) for r, p in matches.ref_matches
        ) / len(matches.ref_matches)
    f1 = math.sqrt(precision * recall) if precision is not None and recall is not None else None
    return precision, recall, f1


def title_length_cv(chapters: ChapterSet) -> float:
    """Coefficient of variation of title word counts within one episode:
    population std divided by mean. A single chapter gives 0."""
    lengths = [count_words(t) for t in chapters.titles]
    if not lengths:
        raise ValueError("chapter set is empty")
    mean = statistics.fmean(lengths)
    if mean == 0:
        raise ValueError("mean title length is zero")
    return statistics.pstdev(lengths) / mean


def corpus_title_cv(chapter_sets: Sequence[ChapterSet]) -> float:
    """Mean per-episode title-length CV over a corpus."""
    if not chapter_sets:
        raise ValueError("no chapter sets given")
    return statistics.fmean(title_length_cv(cs) for cs in chapter_sets)


@dataclass
class EpisodeEval:
    episode_id: str
    windiff: float | None
    rougeL_f1_aligned: float | None
    emb_precision: float | None
    emb_recall: float | None
    emb_f1: float | None
    title_cv: float | None
    n_ref: int
    n_pred: int

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "windiff": self.windiff,
            "rougeL_f1_aligned": self.rougeL_f1_aligned,
            "emb_precision": self.emb_precision,
            "emb_recall": self.emb_recall,
            "emb_f1": self.emb_f1,
            "title_cv": self.title_cv,
            "n_ref": self.n_ref,
            "n_pred": self.n_pred,
        }


def evaluate_episode(
    episode_id: str,
    reference: ChapterSet,
    prediction: ChapterSet,
    n_sentences: int,
    k: int,
    embedder: Embedder,
) -> EpisodeEval:
    if k < n_sentences:
        windiff = window_diff(
            BoundarySeq.from_chapters(reference, n_sentences),
            BoundarySeq.from_chapters(prediction, n_sentences),
            k,
        )
    else:
        windiff = None  # transcript shorter than the window
    precision, recall, f1 = embedding_prf(reference, prediction, embedder, n_sentences)
    return EpisodeEval(
        episode_id=episode_id,
        windiff=windiff,
        rougeL_f1_aligned=aligned_rouge_l(reference, prediction, n_sentences),
        emb_precision=precision,
        emb_recall=recall,
        emb_f1=f1,
        title_cv=title_length_cv(prediction) if len(prediction) else None,
        n_ref=len(reference),
        n_pred=len(prediction),
    )


@dataclass
class EvalReport:
    k: int
    embedder: str
    episodes: list[EpisodeEval]
    skipped_episode_ids: list[str]

    def aggregates(self) -> dict:
        """Mean and population std per metric over episodes where it is defined."""
        out = {}
        for field in METRIC_FIELDS:
            values = [
                v for e in self.episodes if (v := getattr(e, field)) is not None
            ]
            out[field] = {
                "mean": statistics.fmean(values) if values else None,
                "std": statistics.pstdev(values) if values else None,
                "n": len(values),
            }
        return out

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "embedder": self.embedder,
            "n_episodes": len(self.episodes),
            "n_skipped": len(self.skipped_episode_ids),
            "skipped_episode_ids": self.skipped_episode_ids,
            "aggregates": self.aggregates(),
            "episodes": [e.to_dict() for e in self.episodes],
        }


def evaluate_corpus(
    references: Sequence[Episode],
    predictions: Mapping[str, ChapterSet],
    k: int | None = None,
    embedder: Embedder | None = None,
    embedder_name: str = "hashed-bow-256",
) -> EvalReport:
    """Evaluate predictions against reference episodes on their intersection.

    Episodes missing from either side are listed as skipped. ``k`` defaults
    to the estimate from the reference corpus.
    """
    if embedder is None:
        embedder = HashedBowEmbedder()
    with_refs = [e for e in references if e.reference_chapters is not None]
    if k is None:
        k = estimate_k(with_refs)
    ref_ids = {e.episode_id for e in with_refs}
    skipped = sorted(ref_ids.symmetric_difference(predictions))
    episodes = []
    for episode in with_refs:
        if episode.episode_id not in predictions:
            continue
        episodes.append(
            evaluate_episode(
                episode.episode_id,
                episode.reference_chapters,  # type: ignore[arg-type]
                predictions[episode.episode_id],
                len(episode.transcript),
                k,
                embedder,
            )
        )
    if not episodes:
        raise ValueError("no overlapping episode ids between references and predictions")
    return EvalReport(k, embedder_name, episodes, skipped)
