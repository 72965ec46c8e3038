"""Sparse retrieval evaluation over four document-expansion variants.

Each episode becomes one BM25 document whose text depends on the variant:
the description alone, or the description expanded with extracted key
sentences, chapter titles, or the full transcript. Rankings are scored with
graded nDCG, recall at fixed depths, and reciprocal rank against TREC-style
qrels, with paired t-tests between variants.

The analyzer lowercases and splits on non-alphanumeric characters; stemming
is off by default and pluggable, since the reference system's configuration
is an assumption here, not a given.
"""

from __future__ import annotations

import math
import statistics
from array import array
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

from scipy import stats as scipy_stats

from chapkit import _kernels
from chapkit.corpus import ChapterSet, Episode
from chapkit.textutil import analyze

RETRIEVAL_METRICS = ("ndcg", "r@30", "r@50", "r@100", "rr")


class RetrievalError(ValueError):
    """Raised when an index variant's required fields are missing."""


class IndexVariant(str, Enum):
    DESC = "desc"
    DESC_PRINC = "desc_princ"
    DESC_CHAP = "desc_chap"
    DESC_TRANS = "desc_trans"


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be non-negative")
        if not 0 <= self.b <= 1:
            raise ValueError("b must be in [0, 1]")


# query_id -> episode_id -> graded relevance; unknown pairs are grade 0
Judgments = dict[str, dict[str, int]]

Stemmer = Callable[[str], str]


def _unique_unigram_f1(a: set[str], b: set[str]) -> float:
    if not a or not b:
        return 0.0
    overlap = len(a & b)
    if overlap == 0:
        return 0.0
    precision = overlap / len(a)
    recall = overlap / len(b)
    return 2 * precision * recall / (precision + recall)


def principal_extract(transcript, word_cap: int = 24) -> str:
    """Key sentences by independent unique-unigram overlap with the rest.

    Each sentence is scored by the F1 between its unique unigrams and the
    unique unigrams of all other sentences; sentences are taken greedily in
    score order (ties to the earlier sentence) while the total word count
    stays within ``word_cap``, skipping any that would overflow, and are
    returned in document order.
    """
    sentences = transcript.sentences
    if not sentences:
        raise ValueError("transcript is empty")
    token_sets = [set(analyze(s.text)) for s in sentences]
    all_counts: Counter = Counter()
    for tokens in token_sets:
        all_counts.update(tokens)
    scores = []
    for i, tokens in enumerate(token_sets):
        rest = {t for t in all_counts if all_counts[t] > (1 if t in tokens else 0)}
        scores.append(_unique_unigram_f1(tokens, rest))
    order = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
    selected = []
    total = 0
    for i in order:
        words = sentences[i].word_count
        if total + words <= word_cap:
            selected.append(i)
            total += words
    return " ".join(sentences[i].text for i in sorted(selected))


def variant_document(
    episode: Episode,
    variant: IndexVariant,
    chapters: ChapterSet | None = None,
    principal_word_cap: int = 24,
) -> str:
    """The text indexed for one episode under the given variant.

    ``chapters`` overrides the episode's reference chapters as the chapter
    source for DESC_CHAP (e.g. model predictions).
    """
    description = episode.metadata.description
    if variant is IndexVariant.DESC:
        return description
    if variant is IndexVariant.DESC_PRINC:
        if not episode.transcript.sentences:
            raise RetrievalError(
                f"episode {episode.episode_id}: variant {variant.value} needs a transcript"
            )
        return f"{description} {principal_extract(episode.transcript, principal_word_cap)}"
    if variant is IndexVariant.DESC_CHAP:
        source = chapters if chapters is not None else episode.reference_chapters
        if source is None:
            raise RetrievalError(
                f"episode {episode.episode_id}: variant {variant.value} needs chapters"
            )
        return f"{description} {' '.join(source.titles)}"
    if variant is IndexVariant.DESC_TRANS:
        if not episode.transcript.sentences:
            raise RetrievalError(
                f"episode {episode.episode_id}: variant {variant.value} needs a transcript"
            )
        body = " ".join(s.text for s in episode.transcript.sentences)
        return f"{description} {body}"
    raise RetrievalError(f"unknown variant {variant!r}")


@dataclass
class Bm25Index:
    """Inverted index with precomputed per-document length normalizers."""

    params: Bm25Params
    episode_ids: list[str]
    postings: dict[str, tuple[array, array]]  # term -> (doc indices, tfs)
    doc_lengths: array
    avg_doc_length: float
    norms: array = field(repr=False, default_factory=lambda: array("d"))

    @property
    def n_documents(self) -> int:
        return len(self.episode_ids)

    def document_frequency(self, term: str) -> int:
        entry = self.postings.get(term)
        return len(entry[0]) if entry else 0

    def idf(self, term: str) -> float:
        df = self.document_frequency(term)
        return math.log(1 + (self.n_documents - df + 0.5) / (df + 0.5))

    def size_stats(self) -> dict:
        """Postings count and an estimated byte footprint (8 bytes per
        posting plus the UTF-8 term bytes)."""
        n_postings = sum(len(ids) for ids, _ in self.postings.values())
        term_bytes = sum(len(t.encode("utf-8")) for t in self.postings)
        return {
            "documents": self.n_documents,
            "terms": len(self.postings),
            "postings": n_postings,
            "bytes": term_bytes + 8 * n_postings,
        }


def build_index(
    episodes: Sequence[Episode],
    variant: IndexVariant,
    params: Bm25Params = Bm25Params(),
    chapters_by_id: Mapping[str, ChapterSet] | None = None,
    stemmer: Stemmer | None = None,
) -> Bm25Index:
    """Build a BM25 index of one document per episode for the variant."""
    episode_ids = []
    doc_lengths = array("i")
    term_docs: dict[str, list[tuple[int, int]]] = {}
    for doc_idx, episode in enumerate(episodes):
        chapters = chapters_by_id.get(episode.episode_id) if chapters_by_id else None
        tokens = analyze(variant_document(episode, variant, chapters))
        if stemmer is not None:
            tokens = [stemmer(t) for t in tokens]
        episode_ids.append(episode.episode_id)
        doc_lengths.append(len(tokens))
        for term, tf in Counter(tokens).items():
            term_docs.setdefault(term, []).append((doc_idx, tf))
    postings = {
        term: (array("i", (d for d, _ in entries)), array("i", (tf for _, tf in entries)))
        for term, entries in term_docs.items()
    }
    n = len(episode_ids)
    avg = sum(doc_lengths) / n if n else 0.0
    index = Bm25Index(params, episode_ids, postings, doc_lengths, avg)
    k1, b = params.k1, params.b
    index.norms = array(
        "d",
        (k1 * (1 - b + b * (length / avg if avg else 0.0)) for length in doc_lengths),
    )
    return index


def search(
    index: Bm25Index, query: str, top_k: int = 10, stemmer: Stemmer | None = None
) -> list[tuple[str, float]]:
    """Rank episodes for a query by Okapi BM25.

    Only documents matching at least one query term are ranked; ties are
    broken by episode id. Duplicate query terms are scored once.
    """
    terms = analyze(query)
    if stemmer is not None:
        terms = [stemmer(t) for t in terms]
    scores = array("d", bytes(8 * index.n_documents))
    matched = False
    for term in dict.fromkeys(terms):
        entry = index.postings.get(term)
        if entry is None:
            continue
        matched = True
        doc_ids, tfs = entry
        _kernels.bm25_accumulate(doc_ids, tfs, index.norms, scores, index.idf(term), index.params.k1)
    if not matched:
        return []
    ranked = [
        (index.episode_ids[i], scores[i]) for i in range(index.n_documents) if scores[i] > 0
    ]
    ranked.sort(key=lambda pair: (-pair[1], pair[0]))
    return ranked[:top_k]


def ndcg(
    ranked_ids: Sequence[str], grades: Mapping[str, int], cutoff: int | None = None
) -> float | None:
    """Graded nDCG with gain 2^rel - 1 and log2(rank + 1) discount.

    The ideal DCG is computed over all judged relevant documents, without a
    cutoff, so adding a cutoff can only lower the score. None when the query
    has no relevant documents.
    """
    relevant = sorted((g for g in grades.values() if g > 0), reverse=True)
    if not relevant:
        return None
    limit = len(ranked_ids) if cutoff is None else min(cutoff, len(ranked_ids))
    dcg = sum(
        (2 ** grades.get(ranked_ids[r], 0) - 1) / math.log2(r + 2) for r in range(limit)
    )
    idcg = sum((2**g - 1) / math.log2(r + 2) for r, g in enumerate(relevant))
    return dcg / idcg


def recall_at(
    ranked_ids: Sequence[str], grades: Mapping[str, int], n: int
) -> float | None:
    """Fraction of judged-relevant documents retrieved in the top n."""
    relevant = {doc for doc, g in grades.items() if g > 0}
    if not relevant:
        return None
    return len(relevant.intersection(ranked_ids[:n])) / len(relevant)


def reciprocal_rank(ranked_ids: Sequence[str], grades: Mapping[str, int]) -> float | None:
    """1 / rank of the first relevant document; 0 when none is retrieved."""
    if not any(g > 0 for g in grades.values()):
        return None
    for r, doc in enumerate(ranked_ids, start=1):
        if grades.get(doc, 0) > 0:
            return 1 / r
    return 0.0


def load_queries(path: str | Path) -> dict[str, str]:
    """TSV with two columns: query_id <TAB> query_text."""
    queries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ValueError(f"queries line {lineno}: expected 2 tab-separated fields")
            queries[parts[0]] = parts[1]
    return queries


def load_qrels(path: str | Path) -> Judgments:
    """TREC qrels: query_id 0 episode_id grade (whitespace separated)."""
    judgments: Judgments = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"qrels line {lineno}: expected 4 fields")
            query_id, _, episode_id, grade = parts
            judgments.setdefault(query_id, {})[episode_id] = int(grade)
    return judgments


def query_metrics(
    ranked_ids: Sequence[str], grades: Mapping[str, int]
) -> dict[str, float] | None:
    """All report metrics for one query; None when nothing is relevant."""
    value = ndcg(ranked_ids, grades)
    if value is None:
        return None
    return {
        "ndcg": value,
        "r@30": recall_at(ranked_ids, grades, 30),
        "r@50": recall_at(ranked_ids, grades, 50),
        "r@100": recall_at(ranked_ids, grades, 100),
        "rr": reciprocal_rank(ranked_ids, grades),
    }


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided paired t-test; returns (statistic, p_value)."""
    if len(a) != len(b) or len(a) < 2:
        raise ValueError("need two equally sized samples of at least 2 values")
    result = scipy_stats.ttest_rel(a, b)
    return float(result.statistic), float(result.pvalue)


@dataclass
class VariantResult:
    variant: IndexVariant
    index_stats: dict
    per_query: dict[str, dict[str, float]]

    def means(self) -> dict[str, float | None]:
        out: dict[str, float | None] = {}
        for metric in RETRIEVAL_METRICS:
            values = [m[metric] for m in self.per_query.values()]
            out[metric] = statistics.fmean(values) if values else None
        return out


@dataclass
class RetrievalReport:
    params: Bm25Params
    baseline: IndexVariant
    results: dict[IndexVariant, VariantResult]
    unjudged_query_ids: list[str]

    def p_values(self) -> dict[str, dict[str, float | None]]:
        """Paired t-test p-values of each variant against the baseline."""
        base = self.results[self.baseline]
        shared = sorted(base.per_query)
        out: dict[str, dict[str, float | None]] = {}
        for variant, result in self.results.items():
            if variant is self.baseline:
                continue
            row: dict[str, float | None] = {}
            for metric in RETRIEVAL_METRICS:
                a = [result.per_query[q][metric] for q in shared]
                b = [base.per_query[q][metric] for q in shared]
                if len(a) >= 2 and a != b:
                    row[metric] = paired_t_test(a, b)[1]
                else:
                    row[metric] = None
            out[variant.value] = row
        return out

    def to_dict(self) -> dict:
        return {
            "bm25": {"k1": self.params.k1, "b": self.params.b},
            "baseline": self.baseline.value,
            "unjudged_query_ids": self.unjudged_query_ids,
            "variants": {
                variant.value: {
                    "means": result.means(),
                    "index": result.index_stats,
                    "per_query": result.per_query,
                }
                for variant, result in self.results.items()
            },
            "p_values": self.p_values(),
        }


def run_retrieval_eval(
    corpus: Sequence[Episode],
    queries: Mapping[str, str],
    judgments: Judgments,
    variants: Sequence[IndexVariant] = tuple(IndexVariant),
    params: Bm25Params = Bm25Params(),
    chapters_by_id: Mapping[str, ChapterSet] | None = None,
    top_k: int = 1000,
    stemmer: Stemmer | None = None,
    baseline: IndexVariant | None = None,
) -> RetrievalReport:
    """Index the corpus under each variant, run all queries, score them.

    Queries with no judged-relevant documents are excluded from the means
    and listed separately. ``baseline`` (default: desc_princ when present,
    else the first variant) anchors the significance tests.
    """
    if baseline is None:
        baseline = (
            IndexVariant.DESC_PRINC if IndexVariant.DESC_PRINC in variants else variants[0]
        )
    results: dict[IndexVariant, VariantResult] = {}
    unjudged: set[str] = set()
    for variant in variants:
        index = build_index(corpus, variant, params, chapters_by_id, stemmer)
        per_query: dict[str, dict[str, float]] = {}
        for query_id in sorted(queries):
            grades = judgments.get(query_id, {})
            ranked = [doc for doc, _ in search(index, queries[query_id], top_k, stemmer)]
            metrics = query_metrics(ranked, grades)
            if metrics is None:
                unjudged.add(query_id)
            else:
                per_query[query_id] = metrics
        results[variant] = VariantResult(variant, index.size_stats(), per_query)
    return RetrievalReport(params, baseline, results, sorted(unjudged))
