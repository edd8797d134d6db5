"""Sentence splitting, word/token accounting and the boundary coordinate system.

Sentences are numbered from 1. A boundary ``b`` sits after sentence ``b``, so
for a document of ``S`` sentences the interior boundaries are ``1 .. S-1``.
Enumerated prompts use the same convention: marker ``[i]`` follows sentence i.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .exceptions import EmptyInput, InvalidSegmentation, RangeOutOfBounds

TokenEstimator = Callable[[str], int]

ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft",
        "gen", "col", "lt", "sgt", "capt", "cmdr", "rev", "hon", "gov", "sen", "rep",
        "vs", "etc", "e.g", "i.e", "cf", "al", "approx", "dept", "est", "fig", "figs",
        "no", "nos", "vol", "vols", "pp", "ed", "eds", "ch", "sec",
        "inc", "ltd", "co", "corp", "bros",
        "u.s", "u.k", "u.n", "e.u", "a.m", "p.m",
        "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    }
)

_TERMINATOR = re.compile(r"[.!?]+[\"')\]”’]*")
_OPENER = "\"'([“‘"
_WORD_BEFORE = re.compile(r"([A-Za-z][A-Za-z.]*)$")


@dataclass(frozen=True)
class SentenceIndex:
    """Sentence spans over a text, as half-open character offsets.

    Whitespace between spans is not owned by any sentence but is kept in
    ``text`` so segments can be cut back out byte-for-byte.
    """

    text: str
    spans: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.spans:
            raise EmptyInput("a sentence index needs at least one sentence")

    def __len__(self) -> int:
        return len(self.spans)

    @property
    def count(self) -> int:
        return len(self.spans)

    def sentence(self, i: int) -> str:
        """Text of sentence ``i`` (1-based)."""
        self._check(i, i)
        start, end = self.spans[i - 1]
        return self.text[start:end]

    @property
    def sentences(self) -> list[str]:
        return [self.text[s:e] for s, e in self.spans]

    def region(self, start: int, end: int) -> str:
        """Raw text owned by sentences ``start..end`` (inclusive).

        Leading whitespace of the document goes to sentence 1, trailing
        whitespace to sentence S, and each gap to the sentence before it.
        Regions of a tiling therefore concatenate to ``text`` exactly.
        """
        self._check(start, end)
        lo = 0 if start == 1 else self.spans[start - 1][0]
        hi = len(self.text) if end == self.count else self.spans[end][0]
        return self.text[lo:hi]

    def _check(self, start: int, end: int) -> None:
        if not (1 <= start <= end <= self.count):
            raise RangeOutOfBounds(f"range {start}..{end} outside 1..{self.count}")


@dataclass(frozen=True)
class Segmentation:
    """Boundary set over ``num_sentences`` sentences."""

    num_sentences: int
    boundaries: tuple[int, ...] = ()

    def __post_init__(self):
        if self.num_sentences < 1:
            raise InvalidSegmentation("num_sentences must be >= 1")
        bounds = tuple(self.boundaries)
        if any(not isinstance(b, int) or isinstance(b, bool) for b in bounds):
            raise InvalidSegmentation(f"boundaries must be integers: {bounds!r}")
        if list(bounds) != sorted(set(bounds)):
            raise InvalidSegmentation(f"boundaries must be sorted and unique: {bounds!r}")
        if bounds and (bounds[0] < 1 or bounds[-1] > self.num_sentences - 1):
            raise InvalidSegmentation(
                f"boundaries must lie in 1..{self.num_sentences - 1}: {bounds!r}"
            )
        object.__setattr__(self, "boundaries", bounds)

    @classmethod
    def from_boundaries(cls, num_sentences: int, boundaries: Iterable[int]) -> "Segmentation":
        """Build from an unsorted iterable, dropping duplicates."""
        return cls(num_sentences, tuple(sorted({int(b) for b in boundaries})))

    @classmethod
    def from_ranges(cls, ranges: Sequence[tuple[int, int]]) -> "Segmentation":
        if not ranges or ranges[0][0] != 1:
            raise InvalidSegmentation("ranges must start at sentence 1")
        for (_, e), (s, _) in zip(ranges, ranges[1:]):
            if s != e + 1:
                raise InvalidSegmentation("ranges must tile without gaps")
        return cls(ranges[-1][1], tuple(e for _, e in ranges[:-1]))

    @property
    def n_segments(self) -> int:
        return len(self.boundaries) + 1

    def ranges(self) -> list[tuple[int, int]]:
        """Inclusive 1-based sentence ranges of each segment."""
        starts = (0,) + self.boundaries
        ends = self.boundaries + (self.num_sentences,)
        return [(s + 1, e) for s, e in zip(starts, ends)]

    def with_boundary(self, b: int) -> "Segmentation":
        return Segmentation.from_boundaries(self.num_sentences, self.boundaries + (b,))

    def without_boundary(self, b: int) -> "Segmentation":
        return Segmentation(self.num_sentences, tuple(x for x in self.boundaries if x != b))

    def to_labels(self) -> list[int]:
        """Segment label per sentence, 0-based."""
        labels = []
        for label, (s, e) in enumerate(self.ranges()):
            labels.extend([label] * (e - s + 1))
        return labels


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    word_count: int
    token_estimate: int
    non_alpha_ratio: float
    text: str = field(repr=False, default="")

    @property
    def n_sentences(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    reference: Segmentation | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise EmptyInput(f"document {self.id!r} has no text")

    def sentence_index(self) -> SentenceIndex:
        return split_sentences(self.text)

    def validate(self) -> SentenceIndex:
        """Split the text and check the reference against the sentence count."""
        index = self.sentence_index()
        if self.reference is not None and self.reference.num_sentences != index.count:
            raise InvalidSegmentation(
                f"document {self.id!r}: reference covers {self.reference.num_sentences} "
                f"sentences, text splits into {index.count}"
            )
        return index


def _is_abbreviation(line: str, term_start: int, abbreviations: frozenset[str]) -> bool:
    m = _WORD_BEFORE.search(line, 0, term_start)
    if m is None:
        return False
    word = m.group(1).lower().rstrip(".")
    if word in abbreviations:
        return True
    # single-letter initials: "J. Smith"
    return len(word) == 1 and line[m.start(1)].isupper()


def _split_line(line: str, offset: int, abbreviations: frozenset[str]) -> list[tuple[int, int]]:
    spans = []
    pos = len(line) - len(line.lstrip())
    start = pos
    for m in _TERMINATOR.finditer(line, pos):
        end = m.end()
        rest = line[end:]
        stripped = rest.lstrip()
        if not stripped or len(stripped) == len(rest):
            continue
        nxt = stripped.lstrip(_OPENER)[:1]
        if not (nxt.isupper() or nxt.isdigit()):
            continue
        if line[m.start()] == "." and m.group().count(".") == 1 and _is_abbreviation(
            line, m.start(), abbreviations
        ):
            continue
        spans.append((offset + start, offset + end))
        start = end + (len(rest) - len(stripped))
    tail = line[start:].rstrip()
    if tail:
        spans.append((offset + start, offset + start + len(tail)))
    return spans


def split_sentences(text: str, abbreviations: frozenset[str] = ABBREVIATIONS) -> SentenceIndex:
    """Rule-based sentence splitter.

    A run of ``.``, ``!`` or ``?`` (plus closing quotes/brackets) followed by
    whitespace and an uppercase letter or digit ends a sentence, unless the
    word before the period is a known abbreviation or a single initial.
    Every line break also ends a sentence, so headings and table rows stand
    alone.

    Raises:
        EmptyInput: if ``text`` is empty or all whitespace.
    """
    if not text.strip():
        raise EmptyInput("cannot split empty text")
    spans: list[tuple[int, int]] = []
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.rstrip("\r\n")
        if body.strip():
            spans.extend(_split_line(body, offset, abbreviations))
        offset += len(line)
    return SentenceIndex(text, tuple(spans))


def render_enumerated(
    index: SentenceIndex, start: int = 1, end: int | None = None
) -> tuple[str, dict[int, int]]:
    """Join sentences ``start..end`` with ``" [i] "`` markers between them.

    Markers are renumbered from 1 within the range. Returns the rendered text
    and a map from local marker number to global boundary index.

    >>> idx = split_sentences("Hello World. The sky is blue. The sun is is yellow")
    >>> render_enumerated(idx)[0]
    'Hello World. [1] The sky is blue. [2] The sun is is yellow'
    """
    end = index.count if end is None else end
    index._check(start, end)
    parts = []
    mapping = {}
    for local, i in enumerate(range(start, end + 1), 1):
        parts.append(index.sentence(i))
        if i < end:
            parts.append(f" [{local}] ")
            mapping[local] = i
    return "".join(parts), mapping


def estimate_tokens(text: str) -> int:
    """Coarse token count: ceil(utf-8 bytes / 4)."""
    return math.ceil(len(text.encode("utf-8")) / 4)


def word_count(text: str) -> int:
    return len(text.split())


def non_alpha_ratio(text: str) -> float:
    """Share of non-whitespace characters that are not ASCII letters."""
    chars = [c for c in text if not c.isspace()]
    if not chars:
        return 0.0
    bad = sum(1 for c in chars if not ("a" <= c <= "z" or "A" <= c <= "Z"))
    return bad / len(chars)


def segment_stats(
    index: SentenceIndex,
    seg: Segmentation,
    estimator: TokenEstimator = estimate_tokens,
) -> list[Segment]:
    if seg.num_sentences != index.count:
        raise InvalidSegmentation(
            f"segmentation over {seg.num_sentences} sentences, index has {index.count}"
        )
    out = []
    for s, e in seg.ranges():
        body = index.region(s, e)
        out.append(
            Segment(
                start=s,
                end=e,
                word_count=word_count(body),
                token_estimate=estimator(body.strip()),
                non_alpha_ratio=non_alpha_ratio(body),
                text=body,
            )
        )
    return out


def segment_texts(index: SentenceIndex, seg: Segmentation) -> list[str]:
    return [index.region(s, e) for s, e in seg.ranges()]


def reconstruct(index: SentenceIndex, seg: Segmentation) -> str:
    return "".join(segment_texts(index, seg))


def local_to_global(mapping: Mapping[int, int], local: Iterable[int]) -> list[int]:
    return [mapping[b] for b in local]
