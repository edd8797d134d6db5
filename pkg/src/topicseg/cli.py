"""Command-line interface.

Exit codes: 0 success, 1 some documents failed, 2 configuration or input
error, 3 provider failure after retries.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable

from .baselines import similarity_series
from .corpus import (
    FilterRules,
    apply_filters,
    dumps_record,
    filter_report_csv,
    ingest_headed,
    make_concatenated,
    read_jsonl,
    write_jsonl,
)
from .embeddings import HashingEmbeddings, PrecomputedEmbeddings, RemoteEmbeddings
from .estimators import GraphSegmenter, LLMSegmenter, SplitEveryK, TroughSegmenter
from .exceptions import (
    ConfigError,
    GatewayError,
    IdMismatch,
    ParseError,
    SentenceCountMismatch,
    TopicSegError,
)
from .llm.gateway import HTTPChatProvider, MockProvider, ProviderConfig
from .llm.prompts import load_examples
from .metrics import documents_csv, evaluate_pair, aggregate, format_table, summary_csv
from .plotting import bars_svg, series_svg
from .text import Document, Segmentation, split_sentences

logger = logging.getLogger("topicseg")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_PROVIDER = 0, 1, 2, 3
SEGMENTERS = ("llm", "split5", "trough", "graph")

# section -> key -> type; anything else in a config file is rejected
SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "segmenter": {
        "min_words": int, "max_words": int, "max_recursion_depth": int,
        "punctuation_ratio_limit": float, "few_shot": str, "recursive_examples": str,
        "k": int, "window": int, "decay": float, "threshold": float,
        "edge_threshold": float, "max_distance": int, "repair_radius": int,
    },
    "window": {"window_budget": int, "max_segment_tokens": int, "overlap": int},
    "provider": {
        "kind": str, "script": str, "endpoint": str, "model": str, "api_key_env": str,
        "timeout": float, "retries": int, "backoff": float, "max_concurrency": int,
    },
    "embeddings": {"source": str, "api_key_env": str},
    "metrics": {"n": int, "k": int},
    "corpus": {"min_segments": int, "min_segment_words": int, "max_non_alpha_ratio": float},
    "run": {"jobs": int, "seed": int},
}


def load_config(path: str | None) -> dict[str, dict[str, Any]]:
    """Read an INI-style config file into typed sections, rejecting unknown keys."""
    cfg: dict[str, dict[str, Any]] = {s: {} for s in SCHEMA}
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            try:
                cfg[section][key] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from exc
    return cfg


def _override(cfg: dict, section: str, key: str, value: Any) -> None:
    if value is not None:
        cfg[section][key] = value


def _setting(cfg: dict, section: str, key: str, default: Any) -> Any:
    return cfg[section].get(key, default)


# ---------------------------------------------------------------- segment

def read_documents(path: str | Path) -> list[Document]:
    """Input documents: JSONL records with at least ``id`` and ``text``."""
    docs = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                docs.append(Document(str(rec["id"]), rec["text"]))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"bad document record: {exc}", lineno) from exc
    return docs


def build_embedder(cfg: dict):
    source = _setting(cfg, "embeddings", "source", "hashing")
    if source.startswith("hashing"):
        _, _, dim = source.partition(":")
        return HashingEmbeddings(int(dim) if dim else 1024)
    if source.startswith(("http://", "https://")):
        return RemoteEmbeddings(source, api_key_env=cfg["embeddings"].get("api_key_env"))
    if not Path(source).exists():
        raise ConfigError(f"embeddings file {source} not found")
    return PrecomputedEmbeddings.load(source)


def build_provider(cfg: dict):
    p = cfg["provider"]
    kind = p.get("kind", "mock" if "script" in p else "http")
    if kind == "mock":
        if "script" not in p:
            raise ConfigError("mock provider needs a script (--provider PATH)")
        return MockProvider.from_file(p["script"])
    if kind != "http":
        raise ConfigError(f"unknown provider kind {kind!r}")
    fields = {k: v for k, v in p.items() if k not in ("kind", "script")}
    return HTTPChatProvider(ProviderConfig(**fields))


def build_segmenter(name: str, cfg: dict):
    s, w = cfg["segmenter"], cfg["window"]
    seed = _setting(cfg, "run", "seed", 0)
    if name == "split5":
        return SplitEveryK(s.get("k", 5))
    if name == "trough":
        return TroughSegmenter(
            build_embedder(cfg), s.get("window", 5), s.get("decay", 0.5), s.get("threshold", 0.3),
            s.get("min_words", 50), s.get("max_words", 500),
        )
    if name == "graph":
        return GraphSegmenter(
            build_embedder(cfg), s.get("edge_threshold", 0.5), s.get("max_distance", 10),
            s.get("repair_radius", 2), seed,
        )
    if name == "llm":
        est = LLMSegmenter(
            provider=build_provider(cfg),
            window_budget=w.get("window_budget", 3000),
            max_segment_tokens=w.get("max_segment_tokens", 750),
            overlap=w.get("overlap"),
            min_segment_words=s.get("min_words", 50),
            max_segment_words=s.get("max_words", 500),
            max_recursion_depth=s.get("max_recursion_depth", 6),
            punctuation_ratio_limit=s.get("punctuation_ratio_limit", 0.20),
            few_shot_examples=load_examples(s["few_shot"]) if "few_shot" in s else None,
            recursive_examples=load_examples(s["recursive_examples"]) if "recursive_examples" in s else None,
            embedder=build_embedder(cfg) if cfg["embeddings"].get("source") else None,
        )
        est.config()  # fail fast on budget/limit errors
        return est
    raise ConfigError(f"unknown segmenter {name!r}; choose from {', '.join(SEGMENTERS)}")


def _segment_one(est, doc: Document, with_trace: bool) -> dict[str, Any]:
    try:
        if isinstance(est, LLMSegmenter):
            seg, trace = est.segment_with_trace(doc)
            rec = {"doc_id": doc.id, "num_sentences": seg.num_sentences,
                   "boundaries": list(seg.boundaries), "flags": trace.flags}
            if with_trace:
                rec["trace"] = trace.to_dict()
            return rec
        seg = est.segment(doc)
        rec = {"doc_id": doc.id, "num_sentences": seg.num_sentences,
               "boundaries": list(seg.boundaries), "flags": []}
        if with_trace and isinstance(est, TroughSegmenter) and seg.num_sentences > 1:
            rec["trace"] = {"series": [round(float(v), 6) for v in est.series(doc)],
                            "threshold": est.threshold}
        return rec
    except GatewayError as exc:
        return {"doc_id": doc.id, "error": {"type": type(exc).__name__, "message": str(exc), "provider": True}}
    except TopicSegError as exc:
        return {"doc_id": doc.id, "error": {"type": type(exc).__name__, "message": str(exc), "provider": False}}


def cmd_segment(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _override(cfg, "segmenter", "min_words", args.min_words)
    _override(cfg, "segmenter", "max_words", args.max_words)
    _override(cfg, "window", "window_budget", args.window_budget)
    _override(cfg, "window", "overlap", args.overlap)
    _override(cfg, "run", "jobs", args.jobs)
    _override(cfg, "run", "seed", args.seed)
    _override(cfg, "embeddings", "source", args.embeddings)
    if args.provider is not None:
        if args.provider in ("http", "remote"):
            cfg["provider"]["kind"] = "http"
        else:
            cfg["provider"].update(kind="mock", script=args.provider)
    if Path(args.output).resolve() == Path(args.input).resolve():
        raise ConfigError("output must not overwrite the input file")

    est = build_segmenter(args.segmenter, cfg)
    docs = read_documents(args.input)
    jobs = _setting(cfg, "run", "jobs", 1)
    work = lambda d: _segment_one(est, d, args.trace)  # noqa: E731
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(work, docs))
    else:
        records = [work(d) for d in docs]

    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    with open(args.output, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    failed = [r for r in records if "error" in r]
    for r in failed:
        logger.error("%s: %s: %s", r["doc_id"], r["error"]["type"], r["error"]["message"])
    if any(r["error"]["provider"] for r in failed):
        return EXIT_PROVIDER
    return EXIT_PARTIAL if failed else EXIT_OK


# ---------------------------------------------------------------- evaluate

def read_results(path: str | Path) -> dict[str, Segmentation]:
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if "error" in rec:
                    continue
                out[str(rec["doc_id"])] = Segmentation(int(rec["num_sentences"]), tuple(rec["boundaries"]))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"bad result record: {exc}", lineno) from exc
    return out


def _named(arg: str) -> tuple[str, str]:
    name, sep, path = arg.partition("=")
    return (name, path) if sep else (Path(arg).stem, arg)


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _override(cfg, "metrics", "n", args.n)
    _override(cfg, "metrics", "k", args.k)
    n = _setting(cfg, "metrics", "n", 2)
    k = cfg["metrics"].get("k")
    refs = read_jsonl(args.ref)
    ref_ids = [d.id for d in refs]

    reports = {}
    for arg in args.hyp:
        name, path = _named(arg)
        hyps = read_results(path)
        missing = sorted(set(ref_ids) - set(hyps))
        extra = sorted(set(hyps) - set(ref_ids))
        if missing or extra:
            raise IdMismatch(
                f"{name}: {len(missing)} reference ids without results, {len(extra)} unknown ids",
                missing + extra,
            )
        by_dataset: dict[str, list] = {}
        for doc in refs:
            hyp = hyps[doc.id]
            if hyp.num_sentences != doc.reference.num_sentences:
                raise SentenceCountMismatch(
                    f"{name}/{doc.id}: {hyp.num_sentences} sentences vs reference {doc.reference.num_sentences}"
                )
            by_dataset.setdefault(doc.source, []).append(evaluate_pair(doc.id, hyp, doc.reference, n, k))
        for dataset, scores in by_dataset.items():
            reports[(name, dataset)] = aggregate(scores)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = format_table(reports, n)
    (out / "documents.csv").write_text(documents_csv(reports), encoding="utf-8")
    (out / "summary.csv").write_text(summary_csv(reports), encoding="utf-8")
    (out / "table.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_OK


# ---------------------------------------------------------------- corpus

def cmd_corpus_ingest(args: argparse.Namespace) -> int:
    docs = []
    for path in args.files:
        p = Path(path)
        raw = p.read_text(encoding="utf-8")
        docs.append(ingest_headed(raw, p.stem, args.format, args.depth, args.source))
    write_jsonl(args.output, docs)
    return EXIT_OK


def cmd_corpus_filter(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _override(cfg, "corpus", "min_segments", args.min_segments)
    _override(cfg, "corpus", "min_segment_words", args.min_segment_words)
    _override(cfg, "corpus", "max_non_alpha_ratio", args.max_non_alpha)
    rules = FilterRules(**cfg["corpus"])
    docs = read_jsonl(args.input)
    results = [(d, apply_filters(d, rules)) for d in docs]
    write_jsonl(args.output, [d for d, r in results if r.kept])
    report = filter_report_csv((d.id, r) for d, r in results)
    if args.report:
        Path(args.report).write_text(report, encoding="utf-8")
    else:
        sys.stdout.write(report)
    return EXIT_OK


def cmd_corpus_concat(args: argparse.Namespace) -> int:
    pool = read_jsonl(args.input)
    docs = [
        make_concatenated(pool, args.k, args.seed + i, f"conc-{args.seed}-{i}", args.distinct_category)
        for i in range(args.count)
    ]
    with open(args.output, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(dumps_record(d) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- plot

def _load_series(path: str, doc_id: str | None) -> tuple[list[float], float | None, list[int]]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        if path.endswith(".jsonl"):
            for line in text.splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                if doc_id is None or rec.get("doc_id") == doc_id:
                    trace = rec.get("trace") or {}
                    if "series" not in trace:
                        raise ParseError(f"record {rec.get('doc_id')!r} has no series trace")
                    return trace["series"], trace.get("threshold"), rec.get("boundaries", [])
            raise ParseError(f"no record for doc {doc_id!r}")
        rec = json.loads(text)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if isinstance(rec, list):
        return [float(v) for v in rec], None, []
    return [float(v) for v in rec.get("values", [])], rec.get("threshold"), rec.get("boundaries", [])


def cmd_plot_series(args: argparse.Namespace) -> int:
    if args.text:
        # compute the series straight from a corpus document
        docs = {d.id: d for d in read_documents(args.input)}
        if args.doc_id not in docs:
            raise ParseError(f"no document {args.doc_id!r} in {args.input}")
        doc = docs[args.doc_id]
        index = split_sentences(doc.text)
        if index.count < 2:
            raise ParseError("document has a single sentence; no series")
        emb = build_embedder(load_config(args.config)).embed(doc.id, index.sentences)
        values = [float(v) for v in similarity_series(emb)]
        threshold, bounds = args.threshold, []
    else:
        values, threshold, bounds = _load_series(args.input, args.doc_id)
        threshold = args.threshold if args.threshold is not None else threshold
    if not values:
        raise ParseError("series is empty")
    Path(args.output).write_text(series_svg(values, threshold, bounds), encoding="utf-8")
    if args.csv:
        rows = ["boundary,value"] + [f"{i},{v:.6f}" for i, v in enumerate(values, 1)]
        Path(args.csv).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_plot_report(args: argparse.Namespace) -> int:
    try:
        with open(args.input, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {args.input}: {exc}") from exc
    scores: dict[str, dict[str, float]] = {}
    for row in rows:
        name = row.get("segmenter")
        if name is None:
            raise ParseError("report has no 'segmenter' column")
        for col, val in row.items():
            dataset, sep, metric = (col or "").rpartition(":")
            if sep and metric == args.metric and val:
                scores.setdefault(name, {})[dataset] = float(val)
    Path(args.output).write_text(bars_svg(scores, args.metric), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topicseg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("segment", help="segment documents in a JSONL file")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--segmenter", choices=SEGMENTERS, default="llm")
    s.add_argument("--provider", help="mock script JSON path, or 'http' for the configured endpoint")
    s.add_argument("--config")
    s.add_argument("--jobs", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--min-words", type=int)
    s.add_argument("--max-words", type=int)
    s.add_argument("--window-budget", type=int)
    s.add_argument("--overlap", type=int)
    s.add_argument("--embeddings", help="'hashing[:dim]', an embeddings file, or an endpoint URL")
    s.add_argument("--trace", action="store_true", help="include pipeline traces in the output")
    s.set_defaults(func=cmd_segment)

    e = sub.add_parser("evaluate", help="score results against a reference corpus")
    e.add_argument("hyp", nargs="+", help="results JSONL, optionally as NAME=PATH")
    e.add_argument("--ref", required=True)
    e.add_argument("--n", type=int)
    e.add_argument("--k", type=int)
    e.add_argument("--config")
    e.add_argument("--out-dir", default="report")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("corpus", help="build and filter corpora")
    csub = c.add_subparsers(dest="corpus_command", required=True)
    ci = csub.add_parser("ingest", help="turn headed articles into a segmented corpus")
    ci.add_argument("files", nargs="+")
    ci.add_argument("-o", "--output", required=True)
    ci.add_argument("--format", choices=("markdown", "wiki"), default="markdown")
    ci.add_argument("--depth", type=int, default=1)
    ci.add_argument("--source", default="wiki")
    ci.set_defaults(func=cmd_corpus_ingest)
    cf = csub.add_parser("filter", help="drop documents failing the quality rules")
    cf.add_argument("input")
    cf.add_argument("output")
    cf.add_argument("--min-segments", type=int)
    cf.add_argument("--min-segment-words", type=int)
    cf.add_argument("--max-non-alpha", type=float)
    cf.add_argument("--report")
    cf.add_argument("--config")
    cf.set_defaults(func=cmd_corpus_filter)
    cc = csub.add_parser("concat", help="generate articles from segments of different documents")
    cc.add_argument("input")
    cc.add_argument("output")
    cc.add_argument("--k", type=int, default=4)
    cc.add_argument("--seed", type=int, default=0)
    cc.add_argument("--count", type=int, default=1)
    cc.add_argument("--distinct-category", action="store_true")
    cc.set_defaults(func=cmd_corpus_concat)

    pl = sub.add_parser("plot", help="write SVG plots")
    psub = pl.add_subparsers(dest="plot_command", required=True)
    ps = psub.add_parser("series", help="similarity series with threshold and boundaries")
    ps.add_argument("input", help="series JSON, results JSONL with traces, or documents JSONL with --text")
    ps.add_argument("output")
    ps.add_argument("--doc-id")
    ps.add_argument("--threshold", type=float)
    ps.add_argument("--text", action="store_true", help="compute the series from document text")
    ps.add_argument("--config")
    ps.add_argument("--csv")
    ps.set_defaults(func=cmd_plot_series)
    pr = psub.add_parser("report", help="grouped bars from a summary.csv")
    pr.add_argument("input")
    pr.add_argument("output")
    pr.add_argument("--metric", default="B")
    pr.set_defaults(func=cmd_plot_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except GatewayError as exc:
        if isinstance(exc, ConfigError):
            logger.error("configuration error: %s", exc)
            return EXIT_CONFIG
        logger.error("provider failure: %s", exc)
        return EXIT_PROVIDER
    except (TopicSegError, ValueError, OSError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
