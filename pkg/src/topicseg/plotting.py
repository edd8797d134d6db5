"""Minimal deterministic SVG output for similarity series and score reports."""
from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .exceptions import ParseError

_W, _H, _PAD = 640, 240, 32
_PALETTE = ("#4472c4", "#ed7d31", "#a5a5a5", "#ffc000", "#5b9bd5", "#70ad47")


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]


def series_svg(
    values: Sequence[float],
    threshold: float | None = None,
    boundaries: Sequence[int] = (),
    title: str = "similarity series",
) -> str:
    """Line plot of a per-boundary series on a fixed [-1, 1] axis.

    ``boundaries`` are 1-based positions and are drawn as vertical ticks.
    """
    if len(values) == 0:
        raise ParseError("series is empty")
    n = len(values)
    span_x = _W - 2 * _PAD
    span_y = _H - 2 * _PAD

    def x(i: int) -> float:  # i is 1-based
        return _PAD + (span_x * (i - 1) / (n - 1) if n > 1 else span_x / 2)

    def y(v: float) -> float:
        return _PAD + span_y * (1 - (v + 1) / 2)

    out = _header(_W, _H, title)
    out.append(
        f'<line x1="{_PAD}" y1="{y(0):.2f}" x2="{_W - _PAD}" y2="{y(0):.2f}" stroke="#cccccc"/>'
    )
    if threshold is not None:
        out.append(
            f'<line class="threshold" x1="{_PAD}" y1="{y(threshold):.2f}" x2="{_W - _PAD}" '
            f'y2="{y(threshold):.2f}" stroke="#c00000" stroke-dasharray="4 3"/>'
        )
    for b in boundaries:
        out.append(
            f'<line class="boundary" x1="{x(b):.2f}" y1="{_PAD}" x2="{x(b):.2f}" '
            f'y2="{_H - _PAD}" stroke="#70ad47"/>'
        )
    points = " ".join(f"{x(i):.2f},{y(float(v)):.2f}" for i, v in enumerate(values, 1))
    out.append(f'<polyline class="series" fill="none" stroke="#4472c4" points="{points}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bars_svg(
    scores: Mapping[str, Mapping[str, float]],
    metric: str = "B",
    title: str | None = None,
) -> str:
    """Grouped bars: one group per dataset, one bar per segmenter, height = score in [0, 1]."""
    if not scores:
        raise ParseError("report has no rows")
    names = list(scores)
    datasets = list(dict.fromkeys(d for row in scores.values() for d in row))
    if not datasets:
        raise ParseError("report has no scores")
    group_w = (_W - 2 * _PAD) / len(datasets)
    bar_w = group_w * 0.8 / len(names)
    out = _header(_W, _H, title or f"{metric} per segmenter")
    base = _H - _PAD
    for g, d in enumerate(datasets):
        gx = _PAD + g * group_w + group_w * 0.1
        out.append(
            f'<text x="{gx + group_w * 0.4:.2f}" y="{_H - 8}" font-size="11" '
            f'text-anchor="middle">{escape(d)}</text>'
        )
        for k, name in enumerate(names):
            v = scores[name].get(d)
            if v is None:
                continue
            h = (_H - 2 * _PAD) * max(0.0, min(1.0, v))
            out.append(
                f'<rect class="bar" x="{gx + k * bar_w:.2f}" y="{base - h:.2f}" width="{bar_w:.2f}" '
                f'height="{h:.2f}" fill="{_PALETTE[k % len(_PALETTE)]}"><title>{escape(name)} '
                f"{escape(d)} {metric}={v:.4f}</title></rect>"
            )
    for k, name in enumerate(names):
        out.append(
            f'<text x="{_PAD + k * 110}" y="16" font-size="11" '
            f'fill="{_PALETTE[k % len(_PALETTE)]}">{escape(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
