"""Corpus ingestion, quality filters and concatenated-article generation.

JSONL schema, one object per line::

    {"id": str, "source": str, "text": str, "boundaries": [int], "meta": {}}
"""
from __future__ import annotations

import csv
import io
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .exceptions import InsufficientPool, InvalidSegmentation, NoSections, ParseError, SchemaViolation
from .text import Segmentation, SentenceIndex, non_alpha_ratio, split_sentences, word_count

SOURCES = ("human", "wiki", "conc", "synthetic")
_FIELDS = ("id", "source", "text", "boundaries", "meta")


@dataclass(frozen=True)
class CorpusDocument:
    id: str
    source: str
    text: str
    reference: Segmentation
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        index = split_sentences(self.text)
        if self.reference.num_sentences != index.count:
            raise InvalidSegmentation(
                f"document {self.id!r}: reference covers {self.reference.num_sentences} "
                f"sentences, text splits into {index.count}"
            )

    @property
    def index(self) -> SentenceIndex:
        return split_sentences(self.text)

    def segments(self) -> list[str]:
        index = self.index
        return [index.region(s, e) for s, e in self.reference.ranges()]

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source": self.source,
            "text": self.text,
            "boundaries": list(self.reference.boundaries),
            "meta": self.meta,
        }


@dataclass(frozen=True)
class FilterRules:
    min_segments: int = 4
    min_segment_words: int = 20
    max_non_alpha_ratio: float = 0.20

    def __post_init__(self):
        if self.min_segments <= 0 or self.min_segment_words <= 0 or self.max_non_alpha_ratio <= 0:
            raise ValueError("filter thresholds must be positive")


@dataclass(frozen=True)
class FilterResult:
    kept: bool
    reasons: tuple[str, ...]


# ---------------------------------------------------------------- ingestion

_MD_HEADING = re.compile(r"^\s{0,3}(#{1,6})\s+(.*?)\s*#*\s*$")
_WIKI_HEADING = re.compile(r"^\s*(={2,6})\s*(.*?)\s*\1\s*$")


def parse_headed(raw: str, fmt: str = "markdown") -> list[tuple[int, str, list[str]]]:
    """Split an article into ``(level, heading, body_lines)`` sections.

    Markdown ``#`` is level 1; wiki ``== H ==`` is level 1, ``=== H ===`` level 2.
    Text before the first heading becomes a level-0 section with an empty title.
    """
    if fmt == "markdown":
        pattern, offset = _MD_HEADING, 0
    elif fmt == "wiki":
        pattern, offset = _WIKI_HEADING, 1
    else:
        raise ValueError(f"unknown heading format {fmt!r}")
    sections: list[tuple[int, str, list[str]]] = [(0, "", [])]
    for line in raw.splitlines():
        m = pattern.match(line)
        if m:
            sections.append((len(m.group(1)) - offset, m.group(2), []))
        else:
            sections[-1][2].append(line)
    return sections


def ingest_headed(
    raw: str,
    doc_id: str,
    fmt: str = "markdown",
    depth: int = 1,
    source: str = "wiki",
) -> CorpusDocument:
    """Drop heading lines and record a boundary wherever a heading stood.

    Only headings at ``level <= depth`` open a new segment; deeper headings
    are removed without creating a boundary. Sections without body text are
    absorbed by the next one.

    Raises:
        NoSections: no headings, or no body text under them.
    """
    sections = parse_headed(raw, fmt)
    if len(sections) == 1:
        raise NoSections(f"{doc_id}: no headings found")
    groups: list[tuple[list[str], list[str]]] = []  # (titles, body paragraphs)
    for level, title, lines in sections:
        opens = level == 0 or level <= depth
        if opens or not groups:
            groups.append(([title] if title else [], []))
        elif title:
            groups[-1][0].append(title)
        groups[-1][1].extend(p.strip() for p in lines if p.strip())
    groups = [g for g in groups if g[1]]
    if not groups:
        raise NoSections(f"{doc_id}: headings have no body text")
    bodies = ["\n".join(paras) for _, paras in groups]
    text = "\n".join(bodies)
    index = split_sentences(text)
    starts = {s for s, _ in index.spans}
    boundaries, offset = [], 0
    for body in bodies[:-1]:
        offset += len(body) + 1
        b = sum(1 for s, _ in index.spans if s < offset)
        assert offset in starts
        boundaries.append(b)
    return CorpusDocument(
        id=doc_id,
        source=source,
        text=text,
        reference=Segmentation.from_boundaries(index.count, boundaries),
        meta={"headings": [t[0] if t else "" for t, _ in groups]},
    )


# ---------------------------------------------------------------- filters

def apply_filters(doc: CorpusDocument, rules: FilterRules = FilterRules()) -> FilterResult:
    """Keep a document only if every rule passes; report each failing rule."""
    reasons = []
    if doc.reference.n_segments < rules.min_segments:
        reasons.append(f"too_few_segments({doc.reference.n_segments}<{rules.min_segments})")
    shortest = min(word_count(s) for s in doc.segments())
    if shortest < rules.min_segment_words:
        reasons.append(f"short_segment({shortest}<{rules.min_segment_words} words)")
    ratio = non_alpha_ratio(doc.text)
    if ratio > rules.max_non_alpha_ratio:
        reasons.append(f"non_alpha({ratio:.3f}>{rules.max_non_alpha_ratio})")
    return FilterResult(not reasons, tuple(reasons))


def filter_report_csv(results: Iterable[tuple[str, FilterResult]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "kept", "reasons"])
    for doc_id, res in results:
        w.writerow([doc_id, int(res.kept), ";".join(res.reasons)])
    return buf.getvalue()


# ---------------------------------------------------------------- generation

def make_concatenated(
    pool: Sequence[CorpusDocument],
    k: int,
    seed: int,
    doc_id: str | None = None,
    distinct_category: bool = False,
) -> CorpusDocument:
    """Stitch one random segment from each of ``k`` different source documents.

    With ``distinct_category`` the sources must also differ in
    ``meta["category"]``.

    Raises:
        InsufficientPool: fewer than ``k`` eligible source documents.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = random.Random(seed)
    if distinct_category:
        by_cat: dict[Any, list[CorpusDocument]] = {}
        for d in pool:
            by_cat.setdefault(d.meta.get("category"), []).append(d)
        if len(by_cat) < k:
            raise InsufficientPool(f"need {k} categories, pool has {len(by_cat)}")
        cats = rng.sample(sorted(by_cat, key=str), k)
        chosen = [rng.choice(by_cat[c]) for c in cats]
    else:
        if len({d.id for d in pool}) < k or len(pool) < k:
            raise InsufficientPool(f"need {k} source documents, pool has {len(pool)}")
        chosen = rng.sample(list(pool), k)
    parts, origin = [], []
    for d in chosen:
        segs = d.segments()
        j = rng.randrange(len(segs))
        parts.append(" ".join(line.strip() for line in segs[j].strip().splitlines() if line.strip()))
        origin.append({"doc": d.id, "segment": j + 1})
    text = "\n".join(parts)
    index = split_sentences(text)
    boundaries, offset = [], 0
    for part in parts[:-1]:
        offset += len(part) + 1
        boundaries.append(sum(1 for s, _ in index.spans if s < offset))
    return CorpusDocument(
        id=doc_id or f"conc-{seed}",
        source="conc",
        text=text,
        reference=Segmentation.from_boundaries(index.count, boundaries),
        meta={"origin": origin, "seed": seed},
    )


# ---------------------------------------------------------------- jsonl

def from_record(rec: Any, line: int | None = None) -> CorpusDocument:
    if not isinstance(rec, dict):
        raise SchemaViolation("record must be a JSON object", line)
    for name in _FIELDS:
        if name not in rec:
            raise SchemaViolation(f"missing field {name!r}", line, field=name)
    bounds = rec["boundaries"]
    if not isinstance(bounds, list) or not all(isinstance(b, int) and not isinstance(b, bool) for b in bounds):
        raise SchemaViolation("'boundaries' must be a list of integers", line, field="boundaries")
    if not isinstance(rec["text"], str) or not isinstance(rec["meta"], dict):
        raise SchemaViolation("'text' must be a string and 'meta' an object", line)
    try:
        index = split_sentences(rec["text"])
        ref = Segmentation(index.count, tuple(bounds))
        return CorpusDocument(str(rec["id"]), str(rec["source"]), rec["text"], ref, rec["meta"])
    except (InvalidSegmentation, ValueError) as exc:
        raise SchemaViolation(f"document {rec['id']!r}: {exc}", line, field="boundaries") from exc


def read_jsonl(path: str | Path) -> list[CorpusDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except ValueError as exc:
                raise ParseError(f"invalid JSON: {exc}", lineno) from exc
            docs.append(from_record(rec, lineno))
    return docs


def dumps_record(doc: CorpusDocument) -> str:
    return json.dumps(doc.to_record(), ensure_ascii=False)


def write_jsonl(path: str | Path, docs: Iterable[CorpusDocument]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(dumps_record(d) + "\n")
