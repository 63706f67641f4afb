"""Standalone SVG 1.1 line charts for FROC and precision-recall curves.

Output depends only on the input (fixed element order and number formatting,
no timestamps), so files can be compared byte for byte.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .evaluation import FROC, PER_IMAGE, TOTAL, CurveSeries

WIDTH, HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 55
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

_AXIS_LABELS = {
    PER_IMAGE: "False positives per image",
    TOTAL: "Total false positives",
    "recall": "Recall",
}


def legend_label(series: CurveSeries) -> str:
    name = series.method or series.kind
    return f"{name} ({series.auc:.2f})"


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _nice_ticks(hi: float, n: int = 5) -> list[float]:
    """Multiples of a 1/2/5 x 10^k step covering [0, hi]."""
    if hi <= 0:
        return [0.0]
    raw = hi / n
    base = 10.0 ** math.floor(math.log10(raw))
    step = next(m * base for m in (1, 2, 5, 10) if m * base >= raw * (1 - 1e-12))
    count = int(math.floor(hi / step * (1 + 1e-9)))
    return [round(k * step, 12) for k in range(count + 1)]


def _tick_label(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return f"{v:g}"


def emit_plot(series: Sequence[CurveSeries], title: Optional[str] = None,
              x_max: Optional[float] = None) -> str:
    """Render one polyline per series with a legend ``"<method> (<auc>)"``."""
    if not series:
        raise ValueError("nothing to plot")
    for s in series:
        if not s.points:
            raise ValueError(f"series {s.method or s.kind!r} has no points")
    kinds = {s.kind for s in series}
    if len(kinds) != 1:
        raise ValueError("cannot mix curve kinds in one plot")
    kind = kinds.pop()
    x_axis = series[0].x_axis

    if x_max is None:
        x_max = max(max(p[0] for p in s.points) for s in series)
        if kind != FROC:
            x_max = 1.0
    if x_max <= 0:
        x_max = 1.0
    y_max = 1.0

    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + pw * min(x, x_max) / x_max

    def sy(y):
        return MARGIN_TOP + ph * (1.0 - y / y_max)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title is None:
        title = "FROC" if kind == FROC else "Precision-Recall"
    out.append(f'<text x="{WIDTH / 2:.2f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>')

    # grid and ticks
    for t in _nice_ticks(x_max):
        x = sx(t)
        out.append(f'<line x1="{_f(x)}" y1="{_f(sy(0))}" x2="{_f(x)}" y2="{_f(sy(y_max))}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(sy(0) + 16)}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in _nice_ticks(y_max):
        y = sy(t)
        out.append(f'<line x1="{_f(sx(0))}" y1="{_f(y)}" x2="{_f(sx(x_max))}" y2="{_f(y)}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{_f(sx(0) - 6)}" y="{_f(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    out.append(f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')

    x_label = _AXIS_LABELS.get(x_axis, x_axis)
    y_label = "Detection rate" if kind == FROC else "Precision"
    out.append(f'<text x="{_f(MARGIN_LEFT + pw / 2)}" y="{HEIGHT - 12}" text-anchor="middle">'
               f'{escape(x_label)}</text>')
    out.append(f'<text x="18" y="{_f(MARGIN_TOP + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 18 {_f(MARGIN_TOP + ph / 2)})">{escape(y_label)}</text>')

    for k, s in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in s.points if x <= x_max)
        if not pts:
            x, y = s.points[0]
            pts = f"{_f(sx(x))},{_f(sy(y))}"
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')

    # legend, bottom-right for FROC (curves rise to the top-left), bottom-left for PR
    lx = MARGIN_LEFT + pw - 170 if kind == FROC else MARGIN_LEFT + 12
    ly = MARGIN_TOP + ph - 12 - 18 * len(series)
    out.append(f'<rect x="{lx - 6}" y="{ly - 4}" width="164" height="{18 * len(series) + 8}" '
               f'fill="white" stroke="#999999"/>')
    for k, s in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        y = ly + 18 * k + 9
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 22}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{y + 4}">{escape(legend_label(s))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

