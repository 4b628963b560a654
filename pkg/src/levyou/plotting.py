"""Minimal native SVG line plots on log-log axes."""

from __future__ import annotations

import math
from html import escape
from typing import Sequence

WIDTH, HEIGHT = 640, 440
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 55}
COLORS = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad", "#d4801a"]


def _decades(lo: float, hi: float) -> list[float]:
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return [10.0 ** k for k in range(a, b + 1)]


def loglog_svg(series: Sequence[dict], title: str, xlabel: str, ylabel: str,
               annotation: str = "") -> str:
    """Each series: {"label", "x", "y", optional "err"}; non-positive points are skipped."""
    pts = [(x, y) for s in series for x, y in zip(s["x"], s["y"])
           if x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)]
    if not pts:
        pts = [(1.0, 1.0), (10.0, 10.0)]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    xlo, xhi = min(xs) / 1.3, max(xs) * 1.3
    ylo, yhi = min(ys) / 1.5, max(ys) * 1.5
    lx0, lx1, ly0, ly1 = map(math.log10, (xlo, xhi, ylo, yhi))
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + pw * (math.log10(x) - lx0) / (lx1 - lx0)

    def py(y):
        return MARGIN["top"] + ph * (1 - (math.log10(y) - ly0) / (ly1 - ly0))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           f'fill="none" stroke="black"/>']
    for v in _decades(xlo, xhi):
        if xlo <= v <= xhi:
            out.append(f'<line x1="{px(v):.1f}" y1="{MARGIN["top"] + ph}" x2="{px(v):.1f}" '
                       f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px(v):.1f}" y="{MARGIN["top"] + ph + 18}" '
                       f'text-anchor="middle">{v:g}</text>')
    for v in _decades(ylo, yhi):
        if ylo <= v <= yhi:
            out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py(v):.1f}" x2="{MARGIN["left"]}" '
                       f'y2="{py(v):.1f}" stroke="black"/>')
            out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(v) + 4:.1f}" '
                       f'text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(18,{MARGIN["top"] + ph / 2}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    for k, s in enumerate(series):
        color = COLORS[k % len(COLORS)]
        good = [(x, y) for x, y in zip(s["x"], s["y"]) if x > 0 and y > 0]
        if len(good) > 1:
            path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in good)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in good:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3.5" fill="{color}"/>')
        out.append(f'<text x="{MARGIN["left"] + 10}" y="{MARGIN["top"] + 18 + 16 * k}" '
                   f'fill="{color}">{escape(s["label"])}</text>')
    if annotation:
        out.append(f'<text x="{MARGIN["left"] + pw - 10}" y="{MARGIN["top"] + 18}" '
                   f'text-anchor="end">{escape(annotation)}</text>')
    out.append("</svg>")
    return "\n".join(out)
