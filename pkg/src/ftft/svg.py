"""Hand-rolled SVG emitters: metric line charts and annotated heatmaps.

No plotting dependency: the two figures the toolkit needs are simple
enough to emit directly, and a string output is diffable in tests
(structural assertions on elements, not pixels).  All coordinates are
formatted to fixed precision so the same input always yields the same
bytes.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = (
    "#2563a8",
    "#c0443c",
    "#3a8a58",
    "#8156b0",
    "#c98a2f",
    "#566066",
    "#a1527f",
    "#2a8f8f",
)

AXIS_COLOR = "#444444"
GRID_COLOR = "#dddddd"
TEXT_COLOR = "#222222"

# heatmap endpoints: 0 -> light, 1 -> dark
HEAT_LO = (247, 251, 255)
HEAT_HI = (8, 48, 107)


class SvgError(ValueError):
    pass


def _f(x: float) -> str:
    return f"{x:.1f}"


def _clamp(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def _text(x: float, y: float, s: str, size: int = 11, anchor: str = "start",
          color: str = TEXT_COLOR, extra: str = "") -> str:
    return (
        f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" '
        f'font-family="sans-serif" fill="{color}" text-anchor="{anchor}"{extra}>'
        f"{escape(s)}</text>"
    )


def line_chart(
    series: Mapping[str, Sequence[float]],
    title: str = "",
    x_label: str = "checkpoint",
    y_label: str = "",
    y_min: float = 0.0,
    y_max: float = 1.0,
    width: int = 640,
    height: int = 400,
) -> str:
    """Multi-series line chart; series may have different lengths.

    All series share one x scale sized by the longest series, so a
    truncated series visibly ends early.  y values are clamped into
    [y_min, y_max].
    """
    if not series:
        raise SvgError("line_chart needs at least one series")
    if y_max <= y_min:
        raise SvgError(f"empty y range [{y_min}, {y_max}]")
    for label, values in series.items():
        if len(values) == 0:
            raise SvgError(f"series {label!r} is empty")
        for v in values:
            if not math.isfinite(v):
                raise SvgError(f"series {label!r} has non-finite value {v!r}")
    n_max = max(len(v) for v in series.values())

    left, right, top, bottom = 56, 16, 30, 72
    pw = width - left - right
    ph = height - top - bottom

    def xpos(i: int) -> float:
        if n_max == 1:
            return left + pw / 2
        return left + pw * i / (n_max - 1)

    def ypos(v: float) -> float:
        frac = (_clamp(v, y_min, y_max) - y_min) / (y_max - y_min)
        return top + ph * (1.0 - frac)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(_text(width / 2, 18, title, size=13, anchor="middle"))

    # horizontal grid + y ticks at quarters of the range
    for i in range(5):
        v = y_min + (y_max - y_min) * i / 4
        y = ypos(v)
        parts.append(
            f'<line x1="{_f(left)}" y1="{_f(y)}" x2="{_f(left + pw)}" y2="{_f(y)}" '
            f'stroke="{GRID_COLOR}" stroke-width="1"/>'
        )
        parts.append(_text(left - 6, y + 4, f"{v:.2f}", size=10, anchor="end"))

    # x ticks, thinned so labels stay readable
    step = max(1, (n_max + 9) // 10)
    for i in range(0, n_max, step):
        x = xpos(i)
        parts.append(
            f'<line x1="{_f(x)}" y1="{_f(top + ph)}" x2="{_f(x)}" y2="{_f(top + ph + 4)}" '
            f'stroke="{AXIS_COLOR}" stroke-width="1"/>'
        )
        parts.append(_text(x, top + ph + 16, str(i), size=10, anchor="middle"))

    # axes
    parts.append(
        f'<line x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" y2="{_f(top + ph)}" '
        f'stroke="{AXIS_COLOR}" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_f(left)}" y1="{_f(top + ph)}" x2="{_f(left + pw)}" y2="{_f(top + ph)}" '
        f'stroke="{AXIS_COLOR}" stroke-width="1"/>'
    )
    parts.append(_text(left + pw / 2, top + ph + 32, x_label, size=11, anchor="middle"))
    if y_label:
        parts.append(
            _text(
                14,
                top + ph / 2,
                y_label,
                size=11,
                anchor="middle",
                extra=f' transform="rotate(-90 14 {_f(top + ph / 2)})"',
            )
        )

    for idx, (label, values) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        if len(values) == 1:
            parts.append(
                f'<circle class="series" cx="{_f(xpos(0))}" cy="{_f(ypos(values[0]))}" '
                f'r="3" fill="{color}"/>'
            )
        else:
            points = " ".join(
                f"{_f(xpos(i))},{_f(ypos(v))}" for i, v in enumerate(values)
            )
            parts.append(
                f'<polyline class="series" points="{points}" fill="none" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )

    # single-row legend under the x label
    lx = left
    ly = top + ph + 52
    for idx, label in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        parts.append(
            f'<line x1="{_f(lx)}" y1="{_f(ly - 4)}" x2="{_f(lx + 18)}" y2="{_f(ly - 4)}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(_text(lx + 22, ly, label, size=10))
        lx += 30 + 6 * len(label)

    parts.append("</svg>")
    return "\n".join(parts)


def _heat_fill(v: float) -> str:
    v = _clamp(v, 0.0, 1.0)
    rgb = tuple(round(lo + (hi - lo) * v) for lo, hi in zip(HEAT_LO, HEAT_HI))
    return "#%02x%02x%02x" % rgb


def heatmap(
    labels: Sequence[str],
    values: Sequence[Sequence[float]],
    title: str = "",
    cell: int = 64,
) -> str:
    """Annotated square heatmap: 0 maps to light, 1 to dark."""
    n = len(labels)
    if n == 0:
        raise SvgError("heatmap needs at least one label")
    if len(values) != n or any(len(row) != n for row in values):
        raise SvgError(f"values must be {n}x{n}")
    for row in values:
        for v in row:
            if not math.isfinite(v):
                raise SvgError(f"heatmap value {v!r} is not finite")

    left = 10 + max(6 * len(str(l)) for l in labels)
    top = 54 if title else 34
    width = left + n * cell + 10
    height = top + n * cell + 10

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(_text(width / 2, 18, title, size=13, anchor="middle"))

    for j, label in enumerate(labels):
        parts.append(
            _text(left + j * cell + cell / 2, top - 8, str(label), size=10, anchor="middle")
        )
    for i, label in enumerate(labels):
        parts.append(
            _text(left - 6, top + i * cell + cell / 2 + 4, str(label), size=10, anchor="end")
        )

    for i in range(n):
        for j in range(n):
            v = values[i][j]
            x = left + j * cell
            y = top + i * cell
            parts.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{_heat_fill(v)}" stroke="#ffffff" stroke-width="1"/>'
            )
            text_color = "#ffffff" if _clamp(v, 0.0, 1.0) > 0.6 else TEXT_COLOR
            parts.append(
                _text(
                    x + cell / 2,
                    y + cell / 2 + 4,
                    f"{v:.2f}",
                    size=11,
                    anchor="middle",
                    color=text_color,
                )
            )

    parts.append("</svg>")
    return "\n".join(parts)
