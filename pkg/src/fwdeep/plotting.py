"""Minimal deterministic SVG line charts for history CSV files.

No plotting library is involved so that identical inputs always give
byte-identical files: coordinates are formatted with fixed precision and
nothing (dates, random ids) depends on the environment.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from xml.sax.saxutils import escape

from fwdeep.errors import ParseError

WIDTH, HEIGHT = 720, 450
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 170, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass
class Series:
    name: str
    xs: list[float]
    ys: list[float]


def read_series(path: str | os.PathLike, column: str | None = None) -> tuple[Series, str, str]:
    """Load ``(first column, column)`` pairs from a history CSV.

    Without ``column`` the y-axis is ``f`` if present, else ``test_acc``.
    Blank cells are skipped. Returns the series and the x/y column names.
    """
    path = os.fspath(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ParseError("file is empty", path=path, line=1)
        if column is None:
            column = "f" if "f" in header else "test_acc"
        if column not in header:
            raise ParseError(f"no column named {column!r}", path=path, line=1)
        xi, yi = 0, header.index(column)
        xs, ys = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", path=path, line=reader.line_num)
            if row[yi] == "":
                continue
            try:
                x, y = float(row[xi]), float(row[yi])
            except ValueError:
                raise ParseError("non-numeric value", path=path, line=reader.line_num) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError("non-finite value", path=path, line=reader.line_num)
            xs.append(x)
            ys.append(y)
    if not xs:
        raise ParseError(f"no data rows for column {column!r}", path=path)
    name = os.path.splitext(os.path.basename(path))[0]
    return Series(name, xs, ys), header[xi], column


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def render_svg(
    series: list[Series],
    *,
    x_label: str = "x",
    y_label: str = "y",
    title: str = "",
    log_y: bool = False,
) -> str:
    """Render ``series`` as polylines on shared axes; one polyline per series."""
    if not series or any(not s.xs for s in series):
        raise ValueError("nothing to plot")
    ys_all = [y for s in series for y in s.ys]
    if log_y:
        positive = [y for y in ys_all if y > 0]
        floor = min(positive) if positive else 1e-300
        transform = lambda y: math.log10(max(y, floor))
    else:
        transform = lambda y: y
    tys = [transform(y) for y in ys_all]
    x_lo = min(min(s.xs) for s in series)
    x_hi = max(max(s.xs) for s in series)
    y_lo, y_hi = min(tys), max(tys)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    px = lambda x: MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w
    py = lambda ty: MARGIN_TOP + (y_hi - ty) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')

    x0, x1 = MARGIN_LEFT, MARGIN_LEFT + plot_w
    y0, y1 = MARGIN_TOP + plot_h, MARGIN_TOP
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')

    for xt in _nice_ticks(x_lo, x_hi):
        X = _fmt(px(xt))
        out.append(f'<line x1="{X}" y1="{y0}" x2="{X}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{y0 + 18}" text-anchor="middle">{xt:g}</text>')
    if log_y:
        y_ticks = list(range(math.ceil(y_lo), math.floor(y_hi) + 1))
        stride = max(1, len(y_ticks) // 6)
        y_ticks = y_ticks[::stride]
        y_text = lambda t: f"1e{t}"
    else:
        y_ticks = _nice_ticks(y_lo, y_hi)
        y_text = lambda t: f"{t:g}"
    for yt in y_ticks:
        Y = _fmt(py(yt))
        out.append(f'<line x1="{x0 - 5}" y1="{Y}" x2="{x0}" y2="{Y}" stroke="black"/>')
        out.append(f'<line x1="{x0}" y1="{Y}" x2="{x1}" y2="{Y}" stroke="#dddddd"/>')
        out.append(f'<text x="{x0 - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle">{y_text(yt)}</text>')

    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(x_label)}</text>')
    label = f"{y_label} (log scale)" if log_y else y_label
    out.append(
        f'<text x="16" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.2f})">{escape(label)}</text>'
    )

    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(transform(y)))}" for x, y in zip(s.xs, s.ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_TOP + 10 + 20 * i
        lx = x1 + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly}" dominant-baseline="middle">{escape(s.name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot(
    csv_paths: list[str | os.PathLike],
    out_path: str | os.PathLike,
    column: str | None = None,
    log_y: bool = False,
    title: str = "",
) -> None:
    """Read every CSV, then write one SVG. Nothing is written if any input fails to parse."""
    if not csv_paths:
        raise ValueError("no input files")
    loaded = [read_series(p, column) for p in csv_paths]
    series = [s for s, _, _ in loaded]
    _, x_name, y_name = loaded[0]
    svg = render_svg(series, x_label=x_name, y_label=y_name, title=title, log_y=log_y)
    with open(out_path, "w", newline="\n") as fh:
        fh.write(svg)
