"""Static SVG line and scatter plots from CSV columns.

A plot spec is a ``;``-separated list of ``key=value`` pairs::

    x=n;y=var,ref;scale=loglog;kind=line;title=Var(Z_n)

``y`` may name several columns (one series each). Defaults: ``x`` is the
first column, ``y`` the remaining ones, linear axes, lines.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .io import read_csv

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 50
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]


def parse_spec(spec) -> dict:
    if isinstance(spec, dict):
        return dict(spec)
    out = {}
    for part in (spec or "").split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad plot spec entry {part!r}")
        k, v = (s.strip() for s in part.split("=", 1))
        out[k] = v
    return out


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _label(v: float, log: bool) -> str:
    if log:
        return f"1e{v:.2f}".rstrip("0").rstrip(".")
    return f"{v:.4g}"


def emit_plot(csv_path, spec=None, svg_path=None) -> Path:
    """Render columns of ``csv_path`` to SVG; nothing is written on error."""
    spec = parse_spec(spec)
    header, rows = read_csv(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: CSV has no data rows")
    xcol = spec.get("x", header[0])
    ycols = [c.strip() for c in spec.get("y", ",".join(h for h in header if h != xcol)).split(",")]
    for c in [xcol, *ycols]:
        if c not in header:
            raise ValueError(f"{csv_path}: no column {c!r}")
    kind = spec.get("kind", "line")
    if kind not in ("line", "scatter"):
        raise ValueError(f"unknown plot kind {kind!r}")
    log = spec.get("scale", "linear") == "loglog"

    def column(name):
        j = header.index(name)
        try:
            vals = [float(r[j]) for r in rows]
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{csv_path}: malformed value in column {name!r}") from exc
        if log:
            if any(v <= 0 for v in vals):
                raise ValueError(f"log-log plot needs positive values in {name!r}")
            vals = [math.log10(v) for v in vals]
        return vals

    xs = column(xcol)
    series = [(name, column(name)) for name in ycols]
    allx = xs
    ally = [v for _, ys in series for v in ys]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           '<rect width="100%" height="100%" fill="white"/>']
    title = spec.get("title")
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="15">{escape(title)}</text>')
    out.append(f'<g stroke="black" stroke-width="1">'
               f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}"/>'
               f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}"/></g>')
    for v in _ticks(x0, x1):
        out.append(f'<text x="{sx(v):.2f}" y="{TOP + ph + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{escape(_label(v, log))}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<text x="{LEFT - 6}" y="{sy(v) + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{escape(_label(v, log))}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">{escape(xcol)}</text>')
    for i, (name, ys) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = [(sx(a), sy(b)) for a, b in zip(xs, ys)]
        if kind == "line":
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        else:
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="{color}"/>' for a, b in pts)
        ly = TOP + 14 + 16 * i
        out.append(f'<line x1="{LEFT + pw - 120}" y1="{ly - 4}" x2="{LEFT + pw - 100}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw - 95}" y="{ly}" font-family="sans-serif" '
                   f'font-size="11">{escape(name)}</text>')
    out.append("</svg>")

    svg_path = Path(svg_path) if svg_path else Path(csv_path).with_suffix(".svg")
    svg_path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return svg_path
