"""Minimal self-contained SVG charts: line plots (optionally log-y) and grouped
bar charts with error bars. No plotting library is required."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidParameterError

__all__ = ["line_chart", "bar_chart"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=80, right=150, top=40, bottom=50)


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    w = WIDTH - MARGIN["left"] - MARGIN["right"]
    h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{w}" height="{h}" '
        f'fill="none" stroke="black"/>',
        f'<text x="{MARGIN["left"] + w / 2}" y="{HEIGHT - 10}" text-anchor="middle">'
        f'{escape(xlabel)}</text>',
        f'<text x="15" y="{MARGIN["top"] + h / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {MARGIN["top"] + h / 2})">{escape(ylabel)}</text>',
    ]


def _legend(labels: Sequence[str]) -> list[str]:
    x0 = WIDTH - MARGIN["right"] + 10
    out = []
    for i, label in enumerate(labels):
        y = MARGIN["top"] + 15 + 18 * i
        out.append(f'<rect x="{x0}" y="{y - 8}" width="12" height="8" '
                   f'fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{x0 + 18}" y="{y}">{escape(label)}</text>')
    return out


def _scale(lo: float, hi: float, a: float, b: float):
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _write(path, parts: list[str]) -> None:
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def line_chart(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], path,
               *, title: str = "", xlabel: str = "iteration", ylabel: str = "",
               log_y: bool = False) -> None:
    """Write one ``<polyline>`` per series.

    ``series`` maps a label to ``(x, y)``. With ``log_y`` non-positive values
    are dropped from the plot.
    """
    if not series or all(len(x) == 0 for x, _ in series.values()):
        raise InvalidParameterError("nothing to plot")
    cleaned = {}
    for label, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if log_y:
            keep &= y > 0
        cleaned[label] = (x[keep], np.log10(y[keep]) if log_y else y[keep])
    xs = np.concatenate([x for x, _ in cleaned.values()])
    ys = np.concatenate([y for _, y in cleaned.values()])
    if xs.size == 0:
        raise InvalidParameterError("no finite points to plot")
    sx = _scale(xs.min(), xs.max(), MARGIN["left"], WIDTH - MARGIN["right"])
    sy = _scale(ys.min(), ys.max(), HEIGHT - MARGIN["bottom"], MARGIN["top"])

    parts = _frame(title, xlabel, f"log10 {ylabel}" if log_y else ylabel)
    for v in np.linspace(ys.min(), ys.max(), 5):
        parts.append(f'<text x="{MARGIN["left"] - 5}" y="{sy(v) + 4:.1f}" '
                     f'text-anchor="end">{_fmt(v)}</text>')
    for v in np.linspace(xs.min(), xs.max(), 5):
        parts.append(f'<text x="{sx(v):.1f}" y="{HEIGHT - MARGIN["bottom"] + 15}" '
                     f'text-anchor="middle">{_fmt(v)}</text>')
    for i, (label, (x, y)) in enumerate(cleaned.items()):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" '
                     f'stroke-width="1.5" points="{pts}"><title>{escape(label)}</title></polyline>')
    parts += _legend(list(cleaned))
    _write(path, parts)


def bar_chart(groups: Sequence[str], series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
              path, *, title: str = "", xlabel: str = "", ylabel: str = "",
              log_y: bool = False) -> None:
    """Grouped bars with deviation whiskers.

    ``series`` maps a label to ``(means, stds)``, one entry per group.
    """
    if not groups or not series:
        raise InvalidParameterError("nothing to plot")
    tops, bots = [], []
    for means, stds in series.values():
        for m, s in zip(means, stds):
            if m is None or not math.isfinite(m):
                continue
            s = s if s is not None and math.isfinite(s) else 0.0
            hi, lo = m + s, max(m - s, m * 1e-3) if log_y else m - s
            if log_y and m <= 0:
                continue
            tops.append(math.log10(hi) if log_y else hi)
            bots.append(math.log10(lo) if log_y else min(lo, 0.0))
    if not tops:
        raise InvalidParameterError("no finite values to plot")
    lo, hi = min(bots), max(tops)
    sy = _scale(lo, hi, HEIGHT - MARGIN["bottom"], MARGIN["top"])
    base = sy(lo)
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    gw = plot_w / len(groups)
    bw = 0.8 * gw / len(series)

    parts = _frame(title, xlabel, f"log10 {ylabel}" if log_y else ylabel)
    for v in np.linspace(lo, hi, 5):
        parts.append(f'<text x="{MARGIN["left"] - 5}" y="{sy(v) + 4:.1f}" '
                     f'text-anchor="end">{_fmt(v)}</text>')
    for g, name in enumerate(groups):
        cx = MARGIN["left"] + gw * (g + 0.5)
        parts.append(f'<text x="{cx:.1f}" y="{HEIGHT - MARGIN["bottom"] + 15}" '
                     f'text-anchor="middle">{escape(str(name))}</text>')
    for i, (label, (means, stds)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        for g, (m, s) in enumerate(zip(means, stds)):
            if m is None or not math.isfinite(m) or (log_y and m <= 0):
                continue
            s = s if s is not None and math.isfinite(s) else 0.0
            x = MARGIN["left"] + gw * g + 0.1 * gw + bw * i
            top = sy(math.log10(m) if log_y else m)
            parts.append(f'<rect x="{x:.2f}" y="{min(top, base):.2f}" width="{bw:.2f}" '
                         f'height="{abs(base - top):.2f}" fill="{color}">'
                         f'<title>{escape(label)} {escape(str(groups[g]))}: {_fmt(m)}</title></rect>')
            if s > 0:
                up = m + s
                down = max(m - s, m * 1e-3) if log_y else m - s
                y1 = sy(math.log10(up) if log_y else up)
                y2 = sy(math.log10(down) if log_y else down)
                xc = x + bw / 2
                parts.append(f'<line x1="{xc:.2f}" x2="{xc:.2f}" y1="{y1:.2f}" y2="{y2:.2f}" '
                             f'stroke="black"/>')
    parts += _legend(list(series))
    _write(path, parts)
