"""Tiny SVG line/scatter writer so runs can leave a picture without a plotting stack."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = ("#d62728", "#2ca02c", "#1f77b4", "#17becf", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def render_svg(
    series: dict[str, tuple[list[float], list[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    lines: bool = True,
    width: int = 640,
    height: int = 420,
) -> str:
    pad_l, pad_r, pad_t, pad_b = 70, 150, 40, 50
    xs = [x for sx, _ in series.values() for x in sx]
    ys = [y for _, sy in series.values() for y in sy if math.isfinite(y)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def sx(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return pad_t + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{pad_l + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{pad_t + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {pad_t + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for v in _ticks(x0, x1):
        out.append(f'<text x="{sx(v):.1f}" y="{pad_t + ph + 16}" text-anchor="middle">{v:.4g}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<text x="{pad_l - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.4g}</text>')
    for k, (name, (px, py)) in enumerate(series.items()):
        colour = PALETTE[k % len(PALETTE)]
        pts = [(sx(x), sy(y)) for x, y in zip(px, py) if math.isfinite(y)]
        if lines and len(pts) > 1:
            path = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{path}"/>')
        else:
            out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3.5" fill="{colour}"/>' for a, b in pts]
        ly = pad_t + 16 * (k + 1)
        out.append(f'<rect x="{width - pad_r + 12}" y="{ly - 9}" width="10" height="10" fill="{colour}"/>')
        out.append(f'<text x="{width - pad_r + 28}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str | Path, series, **kwargs) -> None:
    Path(path).write_text(render_svg(series, **kwargs))
