"""Overlapping prompt windows and merging of per-window boundary decisions.

Token positions are cumulative estimates over sentences: sentence i occupies
``[pos[i-1], pos[i])`` and boundary ``b`` sits at token ``pos[b]``. Each window
owns an accept zone; consecutive zones meet at the midpoint of the overlap
between their windows, and a boundary exactly on a zone edge belongs to the
later zone.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from itertools import accumulate
from typing import Sequence

from .exceptions import ConfigError, InvalidSegmentation, SentenceTooLarge
from .text import SentenceIndex, Segmentation, TokenEstimator, estimate_tokens


@dataclass(frozen=True)
class WindowConfig:
    window_budget: int = 3000
    max_segment_tokens: int = 750
    overlap: int | None = None

    def __post_init__(self):
        if self.max_segment_tokens <= 0:
            raise ConfigError("max_segment_tokens must be positive")
        if self.overlap is None:
            object.__setattr__(self, "overlap", 2 * self.max_segment_tokens)
        if self.overlap < 0:
            raise ConfigError("overlap must be non-negative")
        if self.window_budget <= self.overlap:
            raise ConfigError(
                f"window_budget ({self.window_budget}) must exceed overlap ({self.overlap})"
            )


@dataclass(frozen=True)
class Window:
    start_sentence: int  # 1-based, inclusive
    end_sentence: int  # inclusive
    token_start: int
    token_end: int
    accept_start: int
    accept_end: int

    @property
    def n_sentences(self) -> int:
        return self.end_sentence - self.start_sentence + 1

    def owns(self, token_pos: int) -> bool:
        return self.accept_start <= token_pos < self.accept_end


@dataclass(frozen=True)
class WindowPlan:
    windows: tuple[Window, ...]
    positions: tuple[int, ...]  # positions[i] = token offset after sentence i; positions[0] == 0

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def __getitem__(self, i: int) -> Window:
        return self.windows[i]

    @property
    def total_tokens(self) -> int:
        return self.positions[-1]

    @property
    def num_sentences(self) -> int:
        return len(self.positions) - 1


def sentence_positions(
    index: SentenceIndex, estimator: TokenEstimator = estimate_tokens
) -> tuple[int, ...]:
    return (0,) + tuple(accumulate(estimator(s) for s in index.sentences))


def plan_windows(
    index: SentenceIndex,
    cfg: WindowConfig,
    estimator: TokenEstimator = estimate_tokens,
) -> WindowPlan:
    """Cover the document with windows of at most ``cfg.window_budget`` tokens.

    Each window starts at the sentence containing its nominal start token and
    is filled greedily with whole sentences up to the budget. The next window
    starts ``cfg.overlap`` tokens before the previous one ended.

    Raises:
        SentenceTooLarge: a single sentence exceeds the budget.
    """
    return plan_windows_from_positions(sentence_positions(index, estimator), cfg)


def plan_windows_from_positions(positions: Sequence[int], cfg: WindowConfig) -> WindowPlan:
    pos = tuple(positions)
    n = len(pos) - 1
    budget, overlap = cfg.window_budget, cfg.overlap
    for i in range(1, n + 1):
        if pos[i] - pos[i - 1] > budget:
            raise SentenceTooLarge(
                f"sentence {i} is {pos[i] - pos[i - 1]} tokens; window budget is {budget}"
            )
    total = pos[-1]

    spans = []  # (first sentence, last sentence), 1-based
    first = 1
    while True:
        last = bisect.bisect_right(pos, pos[first - 1] + budget) - 1
        last = max(last, first)
        spans.append((first, last))
        if last == n:
            break
        nominal = pos[last] - overlap
        # sentence containing the nominal start token
        nxt = bisect.bisect_right(pos, nominal)
        first = max(nxt, first + 1)

    cuts = [0]
    for (f0, l0), (f1, _) in zip(spans, spans[1:]):
        cuts.append((pos[f1 - 1] + pos[l0]) // 2)
    cuts.append(total)

    windows = tuple(
        Window(f, l, pos[f - 1], pos[l], cuts[k], cuts[k + 1])
        for k, (f, l) in enumerate(spans)
    )
    return WindowPlan(windows, pos)


def merge_window_boundaries(
    plan: WindowPlan, per_window: Sequence[Segmentation]
) -> tuple[Segmentation, int]:
    """Map local window boundaries to global ones, keeping only owned ones.

    Returns the merged segmentation and the number of boundaries dropped
    because they fell outside the reporting window's accept zone.
    """
    if len(per_window) != len(plan):
        raise ValueError(f"{len(per_window)} results for {len(plan)} windows")
    kept = set()
    dropped = 0
    for win, seg in zip(plan, per_window):
        if seg.num_sentences != win.n_sentences:
            raise InvalidSegmentation(
                f"window {win.start_sentence}..{win.end_sentence} has {win.n_sentences} "
                f"sentences, result covers {seg.num_sentences}"
            )
        for local in seg.boundaries:
            b = win.start_sentence - 1 + local
            if win.owns(plan.positions[b]):
                kept.add(b)
            else:
                dropped += 1
    return Segmentation.from_boundaries(plan.num_sentences, kept), dropped
