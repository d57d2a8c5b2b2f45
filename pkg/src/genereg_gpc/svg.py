"""Minimal SVG line charts drawn from CSV tables. No computation lives here."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 160, 40, 50


@dataclass(frozen=True)
class ChartSpec:
    table: str
    x: str
    ys: tuple[str, ...]
    title: str
    logy: bool = False
    group_by: str | None = None
    filter: tuple[str, str] | None = None


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def line_chart(series: dict[str, tuple[list[float], list[float]]], title: str,
               xlabel: str, logy: bool = False) -> str:
    pts = []
    for xs, ys in series.values():
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y) and (y > 0 or not logy):
                pts.append((x, math.log10(y) if logy else y))
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def sx(x):
        return _ML + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return _MT + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{_MT + ph + 15}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        label = f"1e{t:.1f}" if logy else f"{t:.3g}"
        out.append(f'<text x="{_ML - 5}" y="{sy(t) + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{_ML + pw / 2:.1f}" y="{_H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    for k, (name, (xs, ys)) in enumerate(series.items()):
        colour = _PALETTE[k % len(_PALETTE)]
        coords = [
            f"{sx(x):.2f},{sy(math.log10(y) if logy else y):.2f}"
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y) and (y > 0 or not logy)
        ]
        if coords:
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(coords)}"/>')
        ly = _MT + 14 * k + 10
        out.append(f'<line x1="{_W - _MR + 10}" y1="{ly}" x2="{_W - _MR + 30}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _MR + 35}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _label(value: str) -> str:
    try:
        return f"{float(value):.4g}"
    except ValueError:
        return value


def chart_from_table(spec: ChartSpec, header: list[str], rows: list[list[str]]) -> str:
    col = {h: i for i, h in enumerate(header)}
    if spec.filter:
        key, value = spec.filter
        rows = [r for r in rows if r[col[key]] == value]
    series: dict[str, tuple[list[float], list[float]]] = {}
    groups = [(None, rows)]
    if spec.group_by:
        seen: dict[str, list] = {}
        for r in rows:
            seen.setdefault(r[col[spec.group_by]], []).append(r)
        groups = list(seen.items())
    for gname, grows in groups:
        for y in spec.ys:
            name = y if gname is None else f"{spec.group_by}={_label(gname)}"
            if gname is not None and len(spec.ys) > 1:
                name += f" {y}"
            xs = [float(r[col[spec.x]]) for r in grows]
            ys = [float(r[col[y]]) for r in grows]
            series[name] = (xs, ys)
    return line_chart(series, spec.title, spec.x, spec.logy)


def write_chart(path, spec: ChartSpec, header, rows) -> Path:
    path = Path(path)
    path.write_text(chart_from_table(spec, header, rows))
    return path
