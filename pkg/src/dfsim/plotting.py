"""Figure-style rendering of sweep CSVs as standalone SVG line plots.

The writer is a pure function of its inputs (fixed canvas, fixed color
cycle, fixed float formatting), so identical CSV bytes yield identical
SVG bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

__all__ = ["PlotSpec", "emit_plot", "render_series"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


class PlotDataError(ValueError):
    """The CSV lacks the columns or rows needed for plotting."""


@dataclass(frozen=True)
class PlotSpec:
    title: str = "worst-case gate fidelity"
    x_column: str = "tau_c_over_2"
    y_column: str = "f_min"
    series_column: str = "gate"
    log_x: bool = True
    width: int = 640
    height: int = 440


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, log: bool) -> List[float]:
    if log:
        lo_e = int(np.floor(np.log10(lo)))
        hi_e = int(np.ceil(np.log10(hi)))
        return [10.0 ** e for e in range(lo_e, hi_e + 1)]
    span = hi - lo or 1.0
    step = 10.0 ** np.floor(np.log10(span / 4.0))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = np.ceil(lo / step) * step
    return list(np.arange(first, hi + 0.5 * step, step))


def render_series(series: Dict[str, List[Tuple[float, float]]],
                  spec: PlotSpec) -> str:
    """SVG text for named (x, y) series."""
    if not series or not any(series.values()):
        raise PlotDataError("no data rows to plot")
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if spec.log_x and x_lo <= 0:
        raise PlotDataError("log x axis requires positive x values")
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    ml, mr, mt, mb = 70, 160, 40, 50
    pw, ph = spec.width - ml - mr, spec.height - mt - mb

    def tx(x: float) -> float:
        if spec.log_x:
            if x_hi == x_lo:
                return ml + pw / 2.0
            return ml + pw * (np.log10(x) - np.log10(x_lo)) \
                / (np.log10(x_hi) - np.log10(x_lo))
        if x_hi == x_lo:
            return ml + pw / 2.0
        return ml + pw * (x - x_lo) / (x_hi - x_lo)

    def ty(y: float) -> float:
        return mt + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" '
        f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect width="{spec.width}" height="{spec.height}" fill="white"/>',
        f'<text x="{ml + pw / 2:.0f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{spec.title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        'stroke="black" stroke-width="1"/>',
    ]

    for xt in _ticks(x_lo, x_hi, spec.log_x):
        if not x_lo <= xt <= x_hi:
            continue
        px = tx(xt)
        label = f"1e{int(round(np.log10(xt)))}" if spec.log_x else _fmt(xt)
        out.append(f'<line x1="{_fmt(px)}" y1="{mt + ph}" x2="{_fmt(px)}" '
                   f'y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px)}" y="{mt + ph + 20}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
    for yt in _ticks(y_lo, y_hi, False):
        if not y_lo <= yt <= y_hi:
            continue
        py = ty(yt)
        out.append(f'<line x1="{ml - 5}" y1="{_fmt(py)}" x2="{ml}" '
                   f'y2="{_fmt(py)}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{yt:.4g}</text>')
    out.append(f'<text x="{ml + pw / 2:.0f}" y="{spec.height - 12}" '
               f'text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{spec.x_column}</text>')

    for i, (name, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = sorted(pts)
        path = " ".join(f"{_fmt(tx(x))},{_fmt(ty(y))}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{_fmt(tx(x))}" cy="{_fmt(ty(y))}" r="2.5" '
                       f'fill="{color}"/>')
        ly = mt + 16 + 18 * i
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" '
                   f'x2="{ml + pw + 34}" y2="{ly - 4}" stroke="{color}" '
                   'stroke-width="1.5"/>')
        out.append(f'<text x="{ml + pw + 40}" y="{ly}" '
                   f'font-family="sans-serif" font-size="11">{name}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path, svg_path, spec: PlotSpec = PlotSpec()) -> str:
    """Render a sweep CSV to SVG; returns the SVG text written."""
    series: Dict[str, List[Tuple[float, float]]] = {}
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                not {spec.x_column, spec.y_column,
                     spec.series_column} <= set(reader.fieldnames):
            raise PlotDataError(
                f"CSV must have columns {spec.series_column!r}, "
                f"{spec.x_column!r}, {spec.y_column!r}")
        for row in reader:
            try:
                x = float(row[spec.x_column])
                y = float(row[spec.y_column])
            except (TypeError, ValueError) as exc:
                raise PlotDataError(f"malformed CSV row {row}: {exc}")
            series.setdefault(row[spec.series_column], []).append((x, y))
    text = render_series(series, spec)
    with open(svg_path, "w") as fh:
        fh.write(text)
    return text
