"""Minimal standalone SVG plotting.

Experiments emit self-contained SVG files (axes, ticks, legend, optional log
scales) next to their CSV data, with no plotting dependency.  Output is
deterministic: same series in, same bytes out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Series", "AxesSpec", "emit_plot"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f"]


@dataclass(frozen=True)
class Series:
    """One labeled curve.  ``style`` is 'line', 'dashed', 'dots' or 'bars'."""

    x: np.ndarray
    y: np.ndarray
    label: str
    style: str = "line"
    color: str | None = None


@dataclass(frozen=True)
class AxesSpec:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xscale: str = "linear"
    yscale: str = "linear"
    width: int = 720
    height: int = 480
    legend: bool = True
    margins: tuple = (70, 20, 45, 55)  # left, right, top, bottom


def _ticks_linear(lo: float, hi: float, target: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _ticks_log(lo: float, hi: float):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    step = max(1, (hi_e - lo_e) // 8)
    return [10.0 ** e for e in range(lo_e, hi_e + 1, step)]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


def emit_plot(series: list, axes: AxesSpec, path) -> None:
    """Write the labeled curves as a standalone SVG file.

    Raises ``ValueError`` on an empty series list or when a log axis has no
    positive data to show.
    """
    if not series:
        raise ValueError("emit_plot requires at least one series")
    logx = axes.xscale == "log"
    logy = axes.yscale == "log"

    xs, ys = [], []
    for s in series:
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        xs.append(x[keep])
        ys.append(y[keep])
    allx = np.concatenate([x for x in xs if x.size]) if any(x.size for x in xs) else None
    if allx is None or allx.size == 0:
        raise ValueError("no plottable points (log axes drop non-positive values)")
    ally = np.concatenate([y for y in ys if y.size])

    def span(v, log):
        lo, hi = float(v.min()), float(v.max())
        if log:
            return lo, hi if hi > lo else lo * 10
        if hi == lo:
            pad = 1.0 if hi == 0 else abs(hi) * 0.1
            return lo - pad, hi + pad
        pad = (hi - lo) * 0.04
        return lo - pad, hi + pad

    x0, x1 = span(allx, logx)
    y0, y1 = span(ally, logy)

    ml, mr, mt, mb = axes.margins
    pw = axes.width - ml - mr
    ph = axes.height - mt - mb

    def to_px(x, y):
        tx = (math.log10(x) - math.log10(x0)) / (math.log10(x1) - math.log10(x0)) if logx \
            else (x - x0) / (x1 - x0)
        ty = (math.log10(y) - math.log10(y0)) / (math.log10(y1) - math.log10(y0)) if logy \
            else (y - y0) / (y1 - y0)
        return ml + tx * pw, mt + (1.0 - ty) * ph

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{axes.width}" '
               f'height="{axes.height}" viewBox="0 0 {axes.width} {axes.height}">')
    out.append(f'<rect width="{axes.width}" height="{axes.height}" fill="white"/>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
               'stroke="#333" stroke-width="1"/>')

    xticks = _ticks_log(x0, x1) if logx else _ticks_linear(x0, x1)
    yticks = _ticks_log(y0, y1) if logy else _ticks_linear(y0, y1)
    for v in xticks:
        if not (x0 <= v <= x1):
            continue
        px, _ = to_px(v, y1)
        out.append(f'<line x1="{px:.2f}" y1="{mt}" x2="{px:.2f}" y2="{mt + ph}" '
                   'stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<line x1="{px:.2f}" y1="{mt + ph}" x2="{px:.2f}" y2="{mt + ph + 4}" '
                   'stroke="#333" stroke-width="1"/>')
        out.append(f'<text x="{px:.2f}" y="{mt + ph + 16}" font-size="11" '
                   f'text-anchor="middle" font-family="sans-serif">{_fmt(v)}</text>')
    for v in yticks:
        if not (y0 <= v <= y1):
            continue
        _, py = to_px(x1, v)
        out.append(f'<line x1="{ml}" y1="{py:.2f}" x2="{ml + pw}" y2="{py:.2f}" '
                   'stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<line x1="{ml - 4}" y1="{py:.2f}" x2="{ml}" y2="{py:.2f}" '
                   'stroke="#333" stroke-width="1"/>')
        out.append(f'<text x="{ml - 7}" y="{py + 3.5:.2f}" font-size="11" '
                   f'text-anchor="end" font-family="sans-serif">{_fmt(v)}</text>')

    if axes.title:
        out.append(f'<text x="{ml + pw / 2:.2f}" y="{mt - 8}" font-size="14" '
                   f'text-anchor="middle" font-family="sans-serif">{axes.title}</text>')
    if axes.xlabel:
        out.append(f'<text x="{ml + pw / 2:.2f}" y="{axes.height - 10}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif">{axes.xlabel}</text>')
    if axes.ylabel:
        cy = mt + ph / 2
        out.append(f'<text x="16" y="{cy:.2f}" font-size="12" text-anchor="middle" '
                   f'font-family="sans-serif" transform="rotate(-90 16 {cy:.2f})">'
                   f'{axes.ylabel}</text>')

    for i, (s, x, y) in enumerate(zip(series, xs, ys)):
        color = s.color or PALETTE[i % len(PALETTE)]
        if x.size == 0:
            continue
        if s.style == "bars":
            width = (x[1] - x[0]) if x.size > 1 else (x1 - x0) / 10
            base_y = to_px(x[0], max(y0, 1e-300) if logy else max(y0, 0.0))[1] \
                if not logy else mt + ph
            base_y = min(base_y, mt + ph)
            for xv, yv in zip(x, y):
                px0, py = to_px(xv - width / 2, yv)
                px1, _ = to_px(xv + width / 2, yv)
                h = base_y - py
                if h <= 0:
                    continue
                out.append(f'<rect x="{px0:.2f}" y="{py:.2f}" width="{px1 - px0:.2f}" '
                           f'height="{h:.2f}" fill="{color}" fill-opacity="0.45" '
                           f'stroke="{color}" stroke-width="0.5"/>')
        elif s.style == "dots":
            for xv, yv in zip(x, y):
                px, py = to_px(xv, yv)
                out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.2" fill="{color}"/>')
        else:
            pts = " ".join(f"{to_px(xv, yv)[0]:.2f},{to_px(xv, yv)[1]:.2f}"
                           for xv, yv in zip(x, y))
            dash = ' stroke-dasharray="6 4"' if s.style == "dashed" else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="1.6"{dash}/>')

    if axes.legend:
        ly = mt + 14
        for i, s in enumerate(series):
            color = s.color or PALETTE[i % len(PALETTE)]
            out.append(f'<line x1="{ml + pw - 150}" y1="{ly}" x2="{ml + pw - 126}" '
                       f'y2="{ly}" stroke="{color}" stroke-width="2"'
                       + (' stroke-dasharray="6 4"' if s.style == "dashed" else "") + '/>')
            out.append(f'<text x="{ml + pw - 120}" y="{ly + 3.5}" font-size="11" '
                       f'font-family="sans-serif">{s.label}</text>')
            ly += 16

    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
