"""Turn model replies into boundary indices."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Sequence

from ..exceptions import NoIndicesFound, NoValidIndex

logger = logging.getLogger(__name__)

_INT = re.compile(r"\d+")
_EMPTY_FORMS = {"", "none", "no boundaries", "no boundary", "n/a", "[]", "empty", "-"}
_STRICT_LIST = re.compile(r"^\s*\[?\s*(\d+(\s*,\s*\d+)*)?\s*\]?\s*$")


@dataclass(frozen=True)
class RunawayConfig:
    min_run: int = 5
    max_step: int = 5


@dataclass(frozen=True)
class IndexListResult:
    indices: tuple[int, ...]
    dropped_out_of_range: int
    dropped_duplicates: int
    runaway_detected: bool
    raw: str

    def canonical(self) -> str:
        return ", ".join(map(str, self.indices))


def _trailing_progression(seq: Sequence[int], max_step: int) -> int:
    """Length of the constant-step run that ends the sequence."""
    if len(seq) < 2:
        return len(seq)
    step = seq[-1] - seq[-2]
    if not 0 < step <= max_step:
        return 1
    n = 2
    for a, b in zip(reversed(seq[:-1]), reversed(seq[:-2])):
        if a - b != step:
            break
        n += 1
    return n


def detect_runaway(
    raw_indices: Sequence[int], max_index: int, cfg: RunawayConfig = RunawayConfig()
) -> bool:
    """Flag the degenerate "regular pattern past the end" reply.

    Fires only when some index exceeds ``max_index`` and the reply ends in an
    arithmetic progression of at least ``cfg.min_run`` terms with a positive
    step of at most ``cfg.max_step``. Regular but in-range answers pass.
    """
    if not raw_indices or max(raw_indices) <= max_index:
        return False
    return _trailing_progression(list(raw_indices), cfg.max_step) >= cfg.min_run


def extract_integers(raw: str) -> list[int]:
    return [int(m) for m in _INT.findall(raw)]


def parse_index_list(
    raw: str,
    max_index: int,
    *,
    strict: bool = False,
    runaway: RunawayConfig = RunawayConfig(),
) -> IndexListResult:
    """Parse a reply such as ``"7, 13"`` into a sorted, deduplicated index set.

    Values outside ``1..max_index`` and repeats are dropped and counted. An
    explicit empty answer (blank or "none") means no boundaries.

    Raises:
        NoIndicesFound: the reply holds no integers and is not an empty answer,
            or (``strict``) is not a bare comma-separated list.
    """
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    values = extract_integers(raw)
    if strict and not _STRICT_LIST.match(raw):
        raise NoIndicesFound(f"reply is not a bare integer list: {raw!r}")
    if not values:
        if raw.strip().strip(".").lower() in _EMPTY_FORMS:
            return IndexListResult((), 0, 0, False, raw)
        raise NoIndicesFound(f"no integers in reply: {raw!r}")

    seen = set()
    out_of_range = dupes = 0
    for v in values:
        if not 1 <= v <= max_index:
            out_of_range += 1
        elif v in seen:
            dupes += 1
        else:
            seen.add(v)
    return IndexListResult(
        indices=tuple(sorted(seen)),
        dropped_out_of_range=out_of_range,
        dropped_duplicates=dupes,
        runaway_detected=detect_runaway(values, max_index, runaway),
        raw=raw,
    )


def parse_single_index(raw: str, max_index: int) -> int:
    """First integer in ``1..max_index`` found in the reply.

    Raises:
        NoValidIndex: no in-range integer present.
    """
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    values = extract_integers(raw)
    for v in values:
        if 1 <= v <= max_index:
            if len(values) > 1:
                logger.info("reply %r holds %d integers; using %d", raw, len(values), v)
            return v
    raise NoValidIndex(f"no index in 1..{max_index} in reply: {raw!r}")
