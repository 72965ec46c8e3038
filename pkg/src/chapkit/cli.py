"""Command-line entry point for reproducible chapterization runs.

Commands: chapterize, evaluate, retrieve-eval, stats, filter. All settings
live in a single JSON config tree (see DEFAULT_CONFIG for the keys and
defaults); command-line flags override file values, which override the
defaults. Every JSON report embeds the resolved config and tool version;
JSONL outputs get a sibling manifest file instead, so their per-line schema
stays clean. Outputs contain no timestamps: two runs with the same config
and seed produce byte-identical files.

Exit codes: 0 success, 1 configuration or validation error, 2 when one or
more episodes failed hard during chapterization (the rest are still
written).
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

from chapkit import __version__
from chapkit.chunking import ChunkBudget, chunk_transcript
from chapkit.corpus import (
    CorpusError,
    corpus_stats,
    load_corpus,
    passes_filters,
    save_corpus,
)
from chapkit.generate import (
    CassetteRecorder,
    CassetteReplayer,
    CohesionGenerator,
    CohesionParams,
    OracleGenerator,
    RemoteConfig,
    RemoteGenerator,
)
from chapkit.metrics import (
    METRIC_FIELDS,
    HashedBowEmbedder,
    RemoteEmbedder,
    estimate_k,
    evaluate_corpus,
)
from chapkit.pipeline import (
    PipelineConfig,
    chapterize_corpus,
    load_predictions,
    write_predictions,
)
from chapkit.retrieval import (
    RETRIEVAL_METRICS,
    Bm25Params,
    IndexVariant,
    load_qrels,
    load_queries,
    run_retrieval_eval,
)


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


DEFAULT_CONFIG: dict = {
    "corpus": None,
    "seed": 0,
    "workers": 1,
    "output_dir": "chapkit-out",
    "generator": {
        "kind": "oracle",
        "cohesion": {
            "block_size": 10,
            "smoothing_width": 2,
            "boundary_depth_cutoff": 0.5,
            "min_segment_sentences": 5,
            "title_words": 6,
        },
        "remote": {
            "endpoint": None,
            "auth_token_env": "",
            "timeout_s": 30.0,
            "max_concurrent": 4,
            "model": "",
            "instruction": None,
            "max_attempts": 3,
            "backoff_base_s": 1.0,
        },
        "cassette": {"path": None, "mode": None},
    },
    "pipeline": {
        "total_words": 8000,
        "context_words": 1000,
        "static_context": True,
        "dynamic_context": True,
        "blocklist": None,
    },
    "eval": {
        "predictions": None,
        "references": None,
        "k": None,
        "k_from": None,
        "embedder": "hashed",
        "embedder_endpoint": None,
        "embedder_auth_env": "",
    },
    "retrieval": {
        "queries": None,
        "qrels": None,
        "variants": ["desc", "desc_princ", "desc_chap", "desc_trans"],
        "k1": 0.9,
        "b": 0.4,
        "top_k": 1000,
        "chapters_from": "reference",
        "baseline": None,
    },
}


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_config(args: argparse.Namespace, overrides: dict) -> dict:
    """defaults <- config file <- command-line flags."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_config = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        config = _merge(config, file_config)
    return _merge(config, overrides)


def _flag_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    for key in ("corpus", "seed", "workers", "output_dir"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _require(config: dict, dotted: str):
    node = config
    for part in dotted.split("."):
        node = node.get(part) if isinstance(node, dict) else None
        if node is None:
            raise ConfigError(f"missing required config value: {dotted}")
    return node


def _provenance(config: dict) -> dict:
    return {"version": __version__, "config": config}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _output_dir(config: dict) -> Path:
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _build_generator(config: dict, episodes):
    kind = config["generator"]["kind"]
    cassette = config["generator"]["cassette"]
    if cassette.get("mode") == "replay":
        if not cassette.get("path"):
            raise ConfigError("cassette replay requires generator.cassette.path")
        return CassetteReplayer(cassette["path"])
    if kind == "oracle":
        try:
            generator = OracleGenerator(episodes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    elif kind == "cohesion":
        params = dict(config["generator"]["cohesion"])
        title_words = params.pop("title_words", 6)
        generator = CohesionGenerator(CohesionParams(**params), title_words)
    elif kind == "remote":
        remote = dict(config["generator"]["remote"])
        if not remote.get("endpoint"):
            raise ConfigError("remote generator requires generator.remote.endpoint")
        if remote.get("instruction") is None:
            remote.pop("instruction")
        generator = RemoteGenerator(RemoteConfig(**remote))
    else:
        raise ConfigError(f"unknown generator kind: {kind!r}")
    if cassette.get("mode") == "record":
        if not cassette.get("path"):
            raise ConfigError("cassette recording requires generator.cassette.path")
        generator = CassetteRecorder(generator, cassette["path"])
    return generator


def _pipeline_config(config: dict) -> PipelineConfig:
    p = config["pipeline"]
    return PipelineConfig(
        budget=ChunkBudget(p["total_words"], p["context_words"]),
        use_static_context=p["static_context"],
        use_dynamic_context=p["dynamic_context"],
        blocklist_path=p["blocklist"],
    )


def cmd_chapterize(args: argparse.Namespace) -> int:
    overrides = _flag_overrides(args)
    if args.generator:
        overrides["generator"] = {"kind": args.generator}
    config = resolve_config(args, overrides)
    corpus_path = _require(config, "corpus")
    episodes = load_corpus(corpus_path)
    pipeline_config = _pipeline_config(config)

    if args.dry_run:
        print(json.dumps(_provenance(config), indent=2, sort_keys=True))
        for episode in episodes:
            chunks = chunk_transcript(episode.transcript, pipeline_config.budget)
            print(f"{episode.episode_id}\tchunks={len(chunks)}")
        return 0

    generator = _build_generator(config, episodes)
    results, failures = chapterize_corpus(
        episodes, generator, pipeline_config, workers=config["workers"]
    )
    out = _output_dir(config)
    write_predictions(out / "predictions.jsonl", results, {e.episode_id: e for e in episodes})
    with open(out / "warnings.log", "w", encoding="utf-8") as fh:
        for result in results:
            for warning in result.warnings:
                fh.write(f"{result.episode_id}\t{warning}\n")
    _write_json(out / "predictions.manifest.json", _provenance(config))
    print(f"wrote {len(results)} prediction(s) to {out / 'predictions.jsonl'}")
    if failures:
        with open(out / "failures.log", "w", encoding="utf-8") as fh:
            for episode_id, message in failures:
                fh.write(f"{episode_id}\t{message}\n")
        for episode_id, message in failures:
            print(f"FAILED {episode_id}: {message}", file=sys.stderr)
        return 2
    return 0


def _build_embedder(config: dict):
    eval_config = config["eval"]
    if eval_config["embedder"] == "hashed":
        return HashedBowEmbedder(), "hashed-bow-256"
    if eval_config["embedder"] == "remote":
        endpoint = eval_config.get("embedder_endpoint")
        if not endpoint:
            raise ConfigError("remote embedder requires eval.embedder_endpoint")
        return (
            RemoteEmbedder(endpoint, eval_config.get("embedder_auth_env", "")),
            f"remote:{endpoint}",
        )
    raise ConfigError(f"unknown embedder: {eval_config['embedder']!r}")


def cmd_evaluate(args: argparse.Namespace) -> int:
    overrides = _flag_overrides(args)
    eval_overrides = {}
    for key in ("predictions", "references", "k", "k_from"):
        value = getattr(args, key, None)
        if value is not None:
            eval_overrides[key] = value
    if eval_overrides:
        overrides["eval"] = eval_overrides
    config = resolve_config(args, overrides)
    if args.dry_run:
        print(json.dumps(_provenance(config), indent=2, sort_keys=True))
        return 0

    references = load_corpus(_require(config, "eval.references"))
    predictions = load_predictions(_require(config, "eval.predictions"))
    k = config["eval"]["k"]
    k_source = "config"
    if k is None and config["eval"]["k_from"]:
        k = estimate_k(load_corpus(config["eval"]["k_from"]))
        k_source = f"estimated from {config['eval']['k_from']}"
    elif k is None:
        k_source = "estimated from references"
    embedder, embedder_name = _build_embedder(config)

    report = evaluate_corpus(references, predictions, k, embedder, embedder_name)
    payload = report.to_dict() | _provenance(config)
    out = _output_dir(config)
    _write_json(out / "eval_report.json", payload)

    print(f"k = {report.k} ({k_source})")
    if report.skipped_episode_ids:
        print(f"skipped (id mismatch): {len(report.skipped_episode_ids)}")
    aggregates = report.aggregates()
    print(f"{'metric':<20}{'mean':>10}{'std':>10}{'n':>6}")
    for metric in METRIC_FIELDS:
        entry = aggregates[metric]
        mean = "-" if entry["mean"] is None else f"{entry['mean']:.3f}"
        std = "-" if entry["std"] is None else f"{entry['std']:.3f}"
        print(f"{metric:<20}{mean:>10}{std:>10}{entry['n']:>6}")
    return 0


def cmd_retrieve_eval(args: argparse.Namespace) -> int:
    overrides = _flag_overrides(args)
    retrieval_overrides = {}
    for key in ("queries", "qrels", "k1", "b", "top_k", "chapters_from", "baseline"):
        value = getattr(args, key, None)
        if value is not None:
            retrieval_overrides[key] = value
    if args.variants:
        retrieval_overrides["variants"] = [v.strip() for v in args.variants.split(",")]
    if retrieval_overrides:
        overrides["retrieval"] = retrieval_overrides
    config = resolve_config(args, overrides)
    if args.dry_run:
        print(json.dumps(_provenance(config), indent=2, sort_keys=True))
        return 0

    corpus = load_corpus(_require(config, "corpus"))
    queries = load_queries(_require(config, "retrieval.queries"))
    judgments = load_qrels(_require(config, "retrieval.qrels"))
    r = config["retrieval"]
    try:
        variants = [IndexVariant(v) for v in r["variants"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    chapters_by_id = None
    if r["chapters_from"] not in (None, "reference"):
        chapters_by_id = load_predictions(r["chapters_from"])
    baseline = IndexVariant(r["baseline"]) if r["baseline"] else None

    report = run_retrieval_eval(
        corpus,
        queries,
        judgments,
        variants,
        Bm25Params(r["k1"], r["b"]),
        chapters_by_id,
        top_k=r["top_k"],
        baseline=baseline,
    )
    payload = report.to_dict() | _provenance(config)
    out = _output_dir(config)
    _write_json(out / "retrieval_report.json", payload)

    header = f"{'variant':<12}" + "".join(f"{m:>9}" for m in RETRIEVAL_METRICS)
    print(header + f"{'postings':>10}")
    for variant, result in report.results.items():
        means = result.means()
        row = f"{variant.value:<12}" + "".join(
            "        -" if means[m] is None else f"{means[m]:>9.3f}" for m in RETRIEVAL_METRICS
        )
        print(row + f"{result.index_stats['postings']:>10}")
    if report.unjudged_query_ids:
        print(f"queries without relevant judgments: {len(report.unjudged_query_ids)}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    config = resolve_config(args, _flag_overrides(args))
    if args.dry_run:
        print(json.dumps(_provenance(config), indent=2, sort_keys=True))
        return 0
    episodes = load_corpus(_require(config, "corpus"))
    stats = corpus_stats(episodes)
    print(f"episodes                {stats.n_episodes}")
    print(f"chapters                {stats.n_chapters}")
    print(f"avg chapters/episode    {stats.avg_chapters:.1f} ± {stats.std_chapters:.1f}")
    print(
        f"avg segment length      {stats.avg_segment_sentences:.1f} "
        f"± {stats.std_segment_sentences:.1f} sentences"
    )
    print(f"avg title length        {stats.avg_title_words:.1f} ± {stats.std_title_words:.1f} words")
    print(f"avg document length     {stats.avg_doc_words:.0f} words")
    if args.output_dir:
        out = _output_dir(config)
        _write_json(out / "stats.json", {"stats": stats.__dict__} | _provenance(config))
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    config = resolve_config(args, _flag_overrides(args))
    if args.dry_run:
        print(json.dumps(_provenance(config), indent=2, sort_keys=True))
        return 0
    episodes = load_corpus(_require(config, "corpus"))
    kept = []
    report = []
    for episode in episodes:
        if episode.reference_chapters is None:
            report.append(
                {
                    "episode_id": episode.episode_id,
                    "passed": False,
                    "violations": ["no reference chapters"],
                    "notes": [],
                }
            )
            continue
        result = passes_filters(episode)
        report.append(
            {
                "episode_id": episode.episode_id,
                "passed": result.passed,
                "violations": list(result.violations),
                "notes": list(result.notes),
            }
        )
        if result.passed:
            kept.append(episode)
    out = _output_dir(config)
    save_corpus(out / "filtered.jsonl", kept)
    _write_json(out / "filtered.manifest.json", _provenance(config))
    _write_json(out / "filter_report.json", {"episodes": report} | _provenance(config))
    print(f"kept {len(kept)} of {len(episodes)} episode(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chapkit",
        description="Chapter generation and evaluation for long transcripts.",
    )
    parser.add_argument("--version", action="version", version=f"chapkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file (keys mirror DEFAULT_CONFIG)")
        p.add_argument("--seed", type=int, help="seed for stochastic choices")
        p.add_argument("--workers", type=int, help="episode-level worker count")
        p.add_argument("--output-dir", dest="output_dir", help="directory for outputs")
        p.add_argument("--dry-run", action="store_true", help="print resolved config and stop")

    p = sub.add_parser("chapterize", help="generate chapters for a corpus")
    common(p)
    p.add_argument("--corpus", help="input corpus JSONL")
    p.add_argument("--generator", choices=["oracle", "cohesion", "remote"])
    p.set_defaults(handler=cmd_chapterize)

    p = sub.add_parser("evaluate", help="score predictions against references")
    common(p)
    p.add_argument("--predictions", help="predictions JSONL from chapterize")
    p.add_argument("--references", help="reference corpus JSONL")
    p.add_argument("--k", type=int, help="WindowDiff window size")
    p.add_argument("--k-from", dest="k_from", help="corpus JSONL to estimate k from")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("retrieve-eval", help="BM25 retrieval evaluation")
    common(p)
    p.add_argument("--corpus", help="episode corpus JSONL")
    p.add_argument("--queries", help="TSV file: query_id <TAB> query text")
    p.add_argument("--qrels", help="TREC qrels file")
    p.add_argument("--variants", help="comma-separated index variants")
    p.add_argument("--k1", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--chapters-from", dest="chapters_from", help="'reference' or predictions JSONL")
    p.add_argument("--baseline", help="variant anchoring the significance tests")
    p.set_defaults(handler=cmd_retrieve_eval)

    p = sub.add_parser("stats", help="descriptive corpus statistics")
    common(p)
    p.add_argument("--corpus", help="corpus JSONL")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("filter", help="apply the dataset filters to a corpus")
    common(p)
    p.add_argument("--corpus", help="corpus JSONL")
    p.set_defaults(handler=cmd_filter)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, CorpusError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
