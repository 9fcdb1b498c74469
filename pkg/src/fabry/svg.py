"""Tiny deterministic SVG line plots (no plotting dependency)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22",
]

WIDTH, HEIGHT = 640, 420
PAD_L, PAD_R, PAD_T, PAD_B = 70, 150, 40, 55


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    dashed: bool = False


@dataclass
class Plot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    series: list[Series] = field(default_factory=list)
    bands: list[tuple[float, float, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:.3g}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        return [float(e) for e in range(math.ceil(lo), math.floor(hi) + 1)]
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10 ** math.floor(math.log10(span / 5))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append(round(v, 12))
        v += step
    return out


def render(plot: Plot) -> str:
    def tx(v):
        return math.log10(v) if plot.logx else v

    def ty(v):
        return math.log10(v) if plot.logy else v

    pts = []
    for s in plot.series:
        for x, y in zip(s.x, s.y):
            if (plot.logx and x <= 0) or (plot.logy and y <= 0):
                continue
            if math.isfinite(x) and math.isfinite(y):
                pts.append((tx(x), ty(y)))
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    ypad = 0.05 * (y1 - y0)
    y0, y1 = y0 - ypad, y1 + ypad
    pw = WIDTH - PAD_L - PAD_R
    ph = HEIGHT - PAD_T - PAD_B

    def px(v):
        return PAD_L + (v - x0) / (x1 - x0) * pw

    def py(v):
        return PAD_T + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for a, b, color in plot.bands:
        xa, xb = px(tx(a)), px(tx(b))
        out.append(
            f'<rect x="{_fmt(xa)}" y="{PAD_T}" width="{_fmt(xb - xa)}" height="{ph}" '
            f'fill="{color}" fill-opacity="0.25"/>'
        )
    out.append(
        f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for v in _ticks(x0, x1, plot.logx):
        X = px(v)
        out.append(f'<line x1="{_fmt(X)}" y1="{PAD_T + ph}" x2="{_fmt(X)}" y2="{PAD_T + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{_fmt(X)}" y="{PAD_T + ph + 18}" text-anchor="middle">{_tick_label(v, plot.logx)}</text>'
        )
    for v in _ticks(y0, y1, plot.logy):
        Y = py(v)
        out.append(f'<line x1="{PAD_L - 5}" y1="{_fmt(Y)}" x2="{PAD_L}" y2="{_fmt(Y)}" stroke="black"/>')
        out.append(
            f'<text x="{PAD_L - 8}" y="{_fmt(Y + 4)}" text-anchor="end">{_tick_label(v, plot.logy)}</text>'
        )
    for i, s in enumerate(plot.series):
        color = PALETTE[i % len(PALETTE)]
        coords = [
            f"{_fmt(px(tx(x)))},{_fmt(py(ty(y)))}"
            for x, y in zip(s.x, s.y)
            if not ((plot.logx and x <= 0) or (plot.logy and y <= 0))
            and math.isfinite(x)
            and math.isfinite(y)
        ]
        dash = ' stroke-dasharray="5,3"' if s.dashed else ""
        if coords:
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{" ".join(coords)}"/>'
            )
        ly = PAD_T + 14 * i + 8
        out.append(
            f'<line x1="{WIDTH - PAD_R + 10}" y1="{ly}" x2="{WIDTH - PAD_R + 30}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>'
        )
        out.append(f'<text x="{WIDTH - PAD_R + 35}" y="{ly + 4}">{escape(s.label)}</text>')
    for j, note in enumerate(plot.notes):
        out.append(f'<text x="{PAD_L + 6}" y="{PAD_T + 14 + 13 * j}">{escape(note)}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(plot.title)}</text>')
    out.append(
        f'<text x="{PAD_L + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(plot.xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{PAD_T + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {PAD_T + ph / 2:.1f})">{escape(plot.ylabel)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
