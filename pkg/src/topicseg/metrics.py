"""Segmentation evaluation: boundary similarity with near misses, Pk, WindowDiff.

Boundary matching pairs hypothesis and reference boundaries monotonically.
A pair at distance ``d < n`` scores ``1 - d/n``; everything else is unmatched.
Among matchings with the highest total score, the one with the most pairs is
used, so a near miss counts as one disagreement rather than two.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import EmptyInput, SentenceCountMismatch
from .text import Segmentation

METRICS = ("B", "BP", "BR", "Pk", "WD")


@dataclass(frozen=True)
class MatchConfig:
    n: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class BoundaryMatching:
    pairs: tuple[tuple[int, int, int], ...]  # (hyp, ref, distance)
    unmatched_hyp: frozenset[int]
    unmatched_ref: frozenset[int]
    score: Fraction  # total pair score, exact

    @property
    def n_hyp(self) -> int:
        return len(self.pairs) + len(self.unmatched_hyp)

    @property
    def n_ref(self) -> int:
        return len(self.pairs) + len(self.unmatched_ref)


def _check(hyp: Segmentation, ref: Segmentation) -> None:
    if hyp.num_sentences != ref.num_sentences:
        raise SentenceCountMismatch(
            f"hypothesis has {hyp.num_sentences} sentences, reference {ref.num_sentences}"
        )


def _n(cfg: MatchConfig | int) -> int:
    return cfg.n if isinstance(cfg, MatchConfig) else MatchConfig(cfg).n


def match_boundaries(hyp: Segmentation, ref: Segmentation, cfg: MatchConfig | int = 2) -> BoundaryMatching:
    """Optimal monotone matching by dynamic programming over both sorted lists."""
    _check(hyp, ref)
    n = _n(cfg)
    H, R = hyp.boundaries, ref.boundaries
    a, b = len(H), len(R)
    zero = (Fraction(0), 0)
    best = [[zero] * (b + 1) for _ in range(a + 1)]
    move = [[""] * (b + 1) for _ in range(a + 1)]
    for i in range(a + 1):
        for j in range(b + 1):
            if i == 0 and j == 0:
                continue
            options = []
            if i and j and abs(H[i - 1] - R[j - 1]) < n:
                s, p = best[i - 1][j - 1]
                options.append(((s + 1 - Fraction(abs(H[i - 1] - R[j - 1]), n), p + 1), "pair"))
            if i:
                options.append((best[i - 1][j], "hyp"))
            if j:
                options.append((best[i][j - 1], "ref"))
            best[i][j], move[i][j] = max(options, key=lambda o: o[0])

    pairs = []
    i, j = a, b
    while i or j:
        m = move[i][j]
        if m == "pair":
            pairs.append((H[i - 1], R[j - 1], abs(H[i - 1] - R[j - 1])))
            i, j = i - 1, j - 1
        elif m == "hyp":
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return BoundaryMatching(
        pairs=tuple(pairs),
        unmatched_hyp=frozenset(H) - {p[0] for p in pairs},
        unmatched_ref=frozenset(R) - {p[1] for p in pairs},
        score=best[a][b][0],
    )


def boundary_similarity(hyp: Segmentation, ref: Segmentation, cfg: MatchConfig | int = 2) -> float:
    """Total pair score over pairs plus unmatched boundaries; 1.0 if both are empty."""
    m = match_boundaries(hyp, ref, cfg)
    denom = len(m.pairs) + len(m.unmatched_hyp) + len(m.unmatched_ref)
    return 1.0 if denom == 0 else float(m.score / denom)


def boundary_precision_recall(
    hyp: Segmentation, ref: Segmentation, cfg: MatchConfig | int = 2
) -> tuple[float, float]:
    """Pair score normalised by hypothesis (BP) and reference (BR) counts.

    An empty side scores 1.0 if the other side is empty too, else 0.0.
    """
    m = match_boundaries(hyp, ref, cfg)
    nh, nr = m.n_hyp, m.n_ref
    bp = float(m.score / nh) if nh else (1.0 if nr == 0 else 0.0)
    br = float(m.score / nr) if nr else (1.0 if nh == 0 else 0.0)
    return bp, br


def default_k(ref: Segmentation) -> int:
    """Half the mean reference segment length, rounded half up, at least 2."""
    mean_len = ref.num_sentences / ref.n_segments
    return max(2, math.floor(mean_len / 2 + 0.5))


def _window_counts(seg: Segmentation, k: int) -> np.ndarray:
    """Boundaries between sentence i and i+k, for i = 1..S-k."""
    S = seg.num_sentences
    ind = np.zeros(S + 1, dtype=np.int64)
    ind[list(seg.boundaries)] = 1
    cs = np.cumsum(ind)
    i = np.arange(1, S - k + 1)
    return cs[i + k - 1] - cs[i - 1]


def _probe_k(hyp: Segmentation, ref: Segmentation, k: int | None) -> int:
    _check(hyp, ref)
    if ref.num_sentences < 2:
        raise ValueError("Pk and WindowDiff need at least two sentences")
    k = default_k(ref) if k is None else k
    if k < 1:
        raise ValueError("k must be >= 1")
    return min(k, ref.num_sentences - 1)


def pk(hyp: Segmentation, ref: Segmentation, k: int | None = None) -> float:
    """Share of probes k sentences apart where hyp and ref disagree on same-segment.

    ``k`` is clipped to ``S - 1``.
    """
    k = _probe_k(hyp, ref, k)
    return float(np.mean((_window_counts(hyp, k) > 0) != (_window_counts(ref, k) > 0)))


def window_diff(hyp: Segmentation, ref: Segmentation, k: int | None = None) -> float:
    """Share of length-k windows whose boundary counts differ."""
    k = _probe_k(hyp, ref, k)
    return float(np.mean(_window_counts(hyp, k) != _window_counts(ref, k)))


@dataclass(frozen=True)
class DocScores:
    doc_id: str
    B: float
    BP: float
    BR: float
    Pk: float
    WD: float
    both_empty: bool = False

    def row(self) -> dict[str, object]:
        return {"doc_id": self.doc_id, **{m: getattr(self, m) for m in METRICS}, "both_empty": self.both_empty}


def evaluate_pair(
    doc_id: str, hyp: Segmentation, ref: Segmentation, n: int = 2, k: int | None = None
) -> DocScores:
    bp, br = boundary_precision_recall(hyp, ref, n)
    if ref.num_sentences >= 2:
        p, wd = pk(hyp, ref, k), window_diff(hyp, ref, k)
    else:
        p = wd = 0.0
    return DocScores(
        doc_id,
        B=boundary_similarity(hyp, ref, n),
        BP=bp,
        BR=br,
        Pk=p,
        WD=wd,
        both_empty=not hyp.boundaries and not ref.boundaries,
    )


@dataclass(frozen=True)
class EvalReport:
    documents: tuple[DocScores, ...]
    means: Mapping[str, float] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.documents)

    @property
    def degenerate(self) -> int:
        """Documents where both sides had no boundaries (scored 1.0 by convention)."""
        return sum(d.both_empty for d in self.documents)


def aggregate(scores: Sequence[DocScores]) -> EvalReport:
    """Unweighted mean of each metric over documents."""
    if not scores:
        raise EmptyInput("nothing to aggregate")
    means = {m: float(np.mean([getattr(d, m) for d in scores])) for m in METRICS}
    return EvalReport(tuple(scores), means)


def documents_csv(reports: Mapping[tuple[str, str], EvalReport]) -> str:
    """Per-document scores, keyed by ``(segmenter, dataset)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["segmenter", "dataset", "doc_id", *METRICS, "both_empty"])
    for (name, dataset), rep in reports.items():
        for d in rep.documents:
            w.writerow([name, dataset, d.doc_id, *(f"{getattr(d, m):.6f}" for m in METRICS), int(d.both_empty)])
    return buf.getvalue()


def _grid(reports: Mapping[tuple[str, str], EvalReport]) -> tuple[list[str], list[str]]:
    names = list(dict.fromkeys(k[0] for k in reports))
    datasets = list(dict.fromkeys(k[1] for k in reports))
    return names, datasets


def summary_csv(reports: Mapping[tuple[str, str], EvalReport]) -> str:
    """One row per segmenter, one ``dataset:metric`` column per pair."""
    names, datasets = _grid(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["segmenter"] + [f"{d}:{m}" for d in datasets for m in METRICS])
    for name in names:
        row = [name]
        for d in datasets:
            rep = reports.get((name, d))
            row += [f"{rep.means[m]:.4f}" if rep else "" for m in METRICS]
        w.writerow(row)
    return buf.getvalue()


def format_table(reports: Mapping[tuple[str, str], EvalReport], n: int = 2) -> str:
    """Aligned text table: segmenters as rows, datasets x metrics as columns."""
    names, datasets = _grid(reports)
    width = max([len(x) for x in names] + [9])
    cell = 6
    group = len(METRICS) * (cell + 1) - 1
    lines = [f"mean scores, boundary match distance n={n}"]
    lines.append(" " * width + " | " + " | ".join(f"{d} (docs={_count(reports, d)})"[:group].center(group) for d in datasets))
    lines.append(" " * width + " | " + " | ".join(" ".join(m.rjust(cell) for m in METRICS) for _ in datasets))
    lines.append("-" * len(lines[-1]))
    for name in names:
        cells = []
        for d in datasets:
            rep = reports.get((name, d))
            cells.append(" ".join((f"{rep.means[m]:.2f}" if rep else "-").rjust(cell) for m in METRICS))
        lines.append(name.ljust(width) + " | " + " | ".join(cells))
    return "\n".join(lines) + "\n"


def _count(reports: Mapping[tuple[str, str], EvalReport], dataset: str) -> int:
    return max((r.count for (_, d), r in reports.items() if d == dataset), default=0)


def evaluate_corpus(
    hyps: Mapping[str, Segmentation],
    refs: Mapping[str, Segmentation],
    n: int = 2,
    k: int | None = None,
    order: Iterable[str] | None = None,
) -> EvalReport:
    ids = list(order) if order is not None else list(refs)
    return aggregate([evaluate_pair(i, hyps[i], refs[i], n, k) for i in ids])
