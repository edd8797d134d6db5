"""Enumerate, window, prompt, merge, then validate segment lengths.

Validation alternates two passes until nothing changes (or ``max_rounds``):
long segments are split by single-boundary prompts, recursing on both halves;
short segments and high-artefact segments are merged into a neighbour.
Anything still outside the word limits at the end is flagged, never dropped.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import accumulate
from typing import Any

import numpy as np

from ..baselines import split_every_k
from ..embeddings import EmbeddingProvider, cosine
from ..exceptions import ConfigError, PromptTooLarge
from ..text import (
    Document,
    Segment,
    Segmentation,
    SentenceIndex,
    estimate_tokens,
    non_alpha_ratio,
    render_enumerated,
    split_sentences,
    word_count,
)
from ..windowing import WindowConfig, merge_window_boundaries, plan_windows
from .gateway import ChatProvider, request_index_list, request_single_index
from .parsing import RunawayConfig
from .prompts import (
    SEGMENT_CUE,
    SEGMENT_INSTRUCTION,
    SYSTEM_PROMPT,
    FewShotExample,
    load_examples,
    recursive_request,
    scaffold_tokens,
    segment_request,
)

logger = logging.getLogger(__name__)

# upper bound on the tokens one " [NNN] " marker adds, charged per sentence when planning
_MARKER_TOKENS = 2


@dataclass(frozen=True)
class SegmenterConfig:
    window: WindowConfig = field(default_factory=WindowConfig)
    min_segment_words: int = 50
    max_segment_words: int = 500
    max_recursion_depth: int = 6
    punctuation_ratio_limit: float = 0.20
    few_shot_examples: tuple[FewShotExample, ...] = field(
        default_factory=lambda: load_examples(kind="segment")
    )
    recursive_examples: tuple[FewShotExample, ...] = field(
        default_factory=lambda: load_examples(kind="recursive")
    )
    system_prompt: str = SYSTEM_PROMPT
    fallback_k: int = 5
    attempts: int = 2
    runaway: RunawayConfig = field(default_factory=RunawayConfig)
    max_rounds: int = 4
    jobs: int = 1

    def __post_init__(self):
        if not 0 < self.min_segment_words < self.max_segment_words:
            raise ConfigError("need 0 < min_segment_words < max_segment_words")
        if self.max_recursion_depth < 1:
            raise ConfigError("max_recursion_depth must be >= 1")
        if not 0 <= self.punctuation_ratio_limit <= 1:
            raise ConfigError("punctuation_ratio_limit must be in [0, 1]")
        if self.attempts < 1 or self.fallback_k < 1 or self.max_rounds < 1 or self.jobs < 1:
            raise ConfigError("attempts, fallback_k, max_rounds and jobs must be >= 1")

    def prompt_window(self) -> WindowConfig:
        """Window config with the prompt scaffolding taken out of the budget."""
        overhead = scaffold_tokens(
            self.system_prompt, SEGMENT_INSTRUCTION, self.few_shot_examples, SEGMENT_CUE
        )
        budget = self.window.window_budget - overhead
        if budget <= self.window.overlap:
            raise ConfigError(
                f"window budget {self.window.window_budget} leaves {budget} tokens after "
                f"{overhead} tokens of prompt scaffolding; overlap is {self.window.overlap}"
            )
        return WindowConfig(budget, self.window.max_segment_tokens, self.window.overlap)


def build_segment_prompt(enumerated: str, cfg: SegmenterConfig):
    return segment_request(
        enumerated, cfg.few_shot_examples, cfg.system_prompt, budget=cfg.window.window_budget
    )


def build_recursive_prompt(enumerated: str, cfg: SegmenterConfig):
    return recursive_request(
        enumerated, cfg.recursive_examples, cfg.system_prompt, budget=cfg.window.window_budget
    )


@dataclass
class SegmentationTrace:
    doc_id: str
    num_sentences: int
    windows: list[dict[str, Any]] = field(default_factory=list)
    dropped_out_of_range: int = 0
    dropped_duplicates: int = 0
    dropped_out_of_zone: int = 0
    merged: list[int] = field(default_factory=list)
    actions: list[dict[str, Any]] = field(default_factory=list)
    fallbacks: list[dict[str, Any]] = field(default_factory=list)
    flags: list[dict[str, Any]] = field(default_factory=list)
    max_depth: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def replay(self) -> Segmentation:
        """Re-apply recorded split/merge actions to the merged window output."""
        seg = Segmentation.from_boundaries(self.num_sentences, self.merged)
        for act in self.actions:
            if act["op"] == "split":
                seg = seg.with_boundary(act["boundary"])
            else:
                seg = seg.without_boundary(act["boundary"])
        return seg


def merge_target(
    short: Segment,
    left: Segment | None,
    right: Segment | None,
    embeddings: np.ndarray | None = None,
) -> str:
    """Pick ``"left"`` or ``"right"`` as the neighbour a short segment joins.

    With sentence embeddings, join the side whose adjacent sentence is more
    similar to the short segment's own edge sentence; otherwise join the
    smaller neighbour. Ties go left.
    """
    if left is None and right is None:
        raise ValueError("segment has no neighbour to merge into")
    if left is None:
        return "right"
    if right is None:
        return "left"
    if embeddings is not None:
        sim_left = cosine(embeddings[left.end - 1], embeddings[short.start - 1])
        sim_right = cosine(embeddings[right.start - 1], embeddings[short.end - 1])
        if sim_left != sim_right:
            return "left" if sim_left > sim_right else "right"
    return "left" if left.word_count <= right.word_count else "right"


class _Validator:
    def __init__(self, index, cfg, provider, embeddings, trace):
        self.index = index
        self.cfg = cfg
        self.provider = provider
        self.embeddings = embeddings
        self.trace = trace
        self.words = (0,) + tuple(accumulate(word_count(s) for s in index.sentences))
        self.events: list[dict[str, Any]] = []
        # depth at which a range left by an earlier split pass resumes
        self.resume: dict[tuple[int, int], int] = {}
        # artefact ranges already merged away; their host is not re-examined
        self.absorbed: list[tuple[int, int]] = []

    def n_words(self, s: int, e: int) -> int:
        return self.words[e] - self.words[s - 1]

    def segment(self, s: int, e: int) -> Segment:
        body = self.index.region(s, e)
        return Segment(s, e, self.n_words(s, e), estimate_tokens(body.strip()), non_alpha_ratio(body), body)

    def midpoint(self, s: int, e: int) -> int:
        total = self.n_words(s, e)
        return min(range(s, e), key=lambda b: abs(2 * self.n_words(s, b) - total))

    # splitting
    def split_pass(self, seg: Segmentation) -> Segmentation:
        bounds = set(seg.boundaries)
        for s, e in seg.ranges():
            self._split(s, e, self.resume.get((s, e), 1), bounds)
        return Segmentation.from_boundaries(seg.num_sentences, bounds)

    def _split(self, s: int, e: int, depth: int, bounds: set[int]) -> None:
        if self.n_words(s, e) <= self.cfg.max_segment_words:
            return
        if s == e:
            self.events.append({"range": [s, e], "reason": "oversized_sentence"})
            return
        if depth > self.cfg.max_recursion_depth:
            if (s, e) not in self.resume:
                self.events.append({"range": [s, e], "reason": "recursion_exhausted"})
            self.resume[(s, e)] = depth
            return
        self.trace.max_depth = max(self.trace.max_depth, depth)
        enumerated, mapping = render_enumerated(self.index, s, e)
        replies: list[str] = []
        local = None
        try:
            req = build_recursive_prompt(enumerated, self.cfg)
        except PromptTooLarge:
            reason = "prompt_too_large"
        else:
            local, replies = request_single_index(self.provider, req, e - s, self.cfg.attempts)
            reason = "no_valid_index"
        if local is None:
            b = self.midpoint(s, e)
            self.trace.fallbacks.append({"stage": "split", "range": [s, e], "reason": reason, "boundary": b})
        else:
            b = mapping[local]
        bounds.add(b)
        self.trace.actions.append(
            {"op": "split", "boundary": b, "range": [s, e], "depth": depth,
             "replies": replies, "fallback": local is None}
        )
        self._split(s, b, depth + 1, bounds)
        self._split(b + 1, e, depth + 1, bounds)

    # merging
    def _merge(self, seg: Segmentation, i: int, reason: str) -> Segmentation | None:
        ranges = seg.ranges()
        segs = [self.segment(s, e) for s, e in ranges]
        left = segs[i - 1] if i > 0 else None
        right = segs[i + 1] if i + 1 < len(segs) else None
        if reason == "short":
            # a short segment never pushes a neighbour over the limit
            limit = self.cfg.max_segment_words
            if left is not None and left.word_count + segs[i].word_count > limit:
                left = None
            if right is not None and right.word_count + segs[i].word_count > limit:
                right = None
            if left is None and right is None:
                return None
        direction = merge_target(segs[i], left, right, self.embeddings)
        s, e = ranges[i]
        b = s - 1 if direction == "left" else e
        self.trace.actions.append(
            {"op": "merge", "boundary": b, "range": [s, e], "direction": direction, "reason": reason}
        )
        return seg.without_boundary(b)

    def merge_pass(self, seg: Segmentation) -> Segmentation:
        limit = self.cfg.punctuation_ratio_limit
        noisy = [
            (s, e) for s, e in seg.ranges()
            if non_alpha_ratio(self.index.region(s, e)) > limit
            and not any(s <= a and b <= e for a, b in self.absorbed)
        ]
        for s, e in noisy:
            ranges = seg.ranges()
            if (s, e) not in ranges or len(ranges) == 1:
                continue
            self.events.append({"range": [s, e], "reason": "artefact"})
            self.absorbed.append((s, e))
            seg = self._merge(seg, ranges.index((s, e)), "artefact")
        stuck: set[tuple[int, int]] = set()
        while seg.n_segments > 1:
            ranges = seg.ranges()
            short = [
                i for i, (s, e) in enumerate(ranges)
                if self.n_words(s, e) < self.cfg.min_segment_words and (s, e) not in stuck
            ]
            if not short:
                break
            merged = self._merge(seg, short[0], "short")
            if merged is None:
                stuck.add(ranges[short[0]])
            else:
                seg = merged
        return seg

    def run(self, seg: Segmentation) -> tuple[Segmentation, list[dict[str, Any]]]:
        for _ in range(self.cfg.max_rounds):
            after = self.merge_pass(self.split_pass(seg))
            if after == seg:
                break
            seg = after
        return seg, self._flags(seg)

    def _flags(self, seg: Segmentation) -> list[dict[str, Any]]:
        ranges = seg.ranges()
        flags = [f for f in self.events if f["reason"] == "artefact"]
        recorded = {tuple(f["range"]): f["reason"] for f in self.events if f["reason"] != "artefact"}
        for s, e in ranges:
            n = self.n_words(s, e)
            if n > self.cfg.max_segment_words:
                reason = recorded.get((s, e), "too_long")
                flags.append({"range": [s, e], "reason": reason, "words": n})
            elif n < self.cfg.min_segment_words:
                flags.append({"range": [s, e], "reason": "too_short", "words": n})
        return flags


def validate_segments(
    index: SentenceIndex,
    seg: Segmentation,
    cfg: SegmenterConfig,
    provider: ChatProvider,
    embeddings: np.ndarray | None = None,
    trace: SegmentationTrace | None = None,
) -> tuple[Segmentation, list[dict[str, Any]], list[dict[str, Any]]]:
    """Enforce segment word limits. Returns ``(segmentation, actions, flags)``."""
    trace = trace or SegmentationTrace("", index.count, merged=list(seg.boundaries))
    start = len(trace.actions)
    out, flags = _Validator(index, cfg, provider, embeddings, trace).run(seg)
    trace.flags = flags
    return out, trace.actions[start:], flags


def _prompt_window(index, win, cfg, provider) -> tuple[tuple[int, ...], dict[str, Any], tuple[int, int]]:
    enumerated, _ = render_enumerated(index, win.start_sentence, win.end_sentence)
    n = win.n_sentences
    record: dict[str, Any] = {
        "sentences": [win.start_sentence, win.end_sentence],
        "tokens": [win.token_start, win.token_end],
        "accept": [win.accept_start, win.accept_end],
        "replies": [],
        "fallback": False,
    }
    if n == 1:
        record["local"] = []
        return (), record, (0, 0)
    req = build_segment_prompt(enumerated, cfg)
    result, replies = request_index_list(provider, req, n - 1, cfg.attempts, cfg.runaway)
    record["replies"] = replies
    if result is None:
        local = split_every_k(n, cfg.fallback_k).boundaries
        record["fallback"] = True
        counts = (0, 0)
    else:
        local = result.indices
        counts = (result.dropped_out_of_range, result.dropped_duplicates)
    record["local"] = list(local)
    return tuple(local), record, counts


def segment_document(
    doc: Document | str,
    cfg: SegmenterConfig,
    provider: ChatProvider,
    embedder: EmbeddingProvider | None = None,
) -> tuple[Segmentation, SegmentationTrace]:
    """Segment one document end to end. The input text is never modified."""
    if isinstance(doc, str):
        doc = Document("doc", doc)
    index = split_sentences(doc.text)
    S = index.count
    trace = SegmentationTrace(doc.id, S)

    window_cfg = cfg.prompt_window()
    plan = plan_windows(index, window_cfg, lambda s: estimate_tokens(s) + _MARKER_TOKENS)
    call = lambda w: _prompt_window(index, w, cfg, provider)  # noqa: E731
    if cfg.jobs > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(call, plan))
    else:
        results = [call(w) for w in plan]

    per_window = []
    for win, (local, record, (oor, dup)) in zip(plan, results):
        per_window.append(Segmentation(win.n_sentences, local))
        trace.windows.append(record)
        trace.dropped_out_of_range += oor
        trace.dropped_duplicates += dup
        if record["fallback"]:
            trace.fallbacks.append(
                {"stage": "window", "sentences": record["sentences"], "reason": "unusable_reply"}
            )
    merged, trace.dropped_out_of_zone = merge_window_boundaries(plan, per_window)
    trace.merged = list(merged.boundaries)

    embeddings = None
    if embedder is not None and S > 1:
        embeddings = embedder.embed(doc.id, index.sentences)
    seg, _, _ = validate_segments(index, merged, cfg, provider, embeddings, trace)
    return seg, trace

