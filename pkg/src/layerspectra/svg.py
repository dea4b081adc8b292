"""Minimal deterministic SVG line plots (no timestamps, fixed precision)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def _fmt(v):
    return f"{v:.2f}"


def _tick(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.2e}"
    return f"{v:.4g}"


def line_plot(series, title="", xlabel="", ylabel="", width=640, height=400, logx=False, logy=False, equal=False):
    """Render ``series`` (list of ``(label, x, y)``) as an SVG document string."""
    left, right, top, bottom = 70, 20, 36, 48
    pw, ph = width - left - right, height - top - bottom

    def tx(v):
        return np.log10(v) if logx else v

    def ty(v):
        return np.log10(v) if logy else v

    xs, ys = [], []
    clean = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        x, y = tx(x[ok]), ty(y[ok])
        clean.append((label, x, y))
        if x.size:
            xs.append(x)
            ys.append(y)
    if xs:
        x0, x1 = float(min(a.min() for a in xs)), float(max(a.max() for a in xs))
        y0, y1 = float(min(a.min() for a in ys)), float(max(a.max() for a in ys))
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    if equal:
        sx, sy = pw / (x1 - x0), ph / (y1 - y0)
        s = min(sx, sy)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        x0, x1 = cx - pw / s / 2, cx + pw / s / 2
        y0, y1 = cy - ph / s / 2, cy + ph / s / 2

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        xl = 10**xv if logx else xv
        yl = 10**yv if logy else yv
        out.append(f'<text x="{_fmt(px(xv))}" y="{top + ph + 14}" text-anchor="middle">{_tick(xl)}</text>')
        out.append(f'<text x="{left - 4}" y="{_fmt(py(yv) + 4)}" text-anchor="end">{_tick(yl)}</text>')
    for idx, (label, x, y) in enumerate(clean):
        color = _COLORS[idx % len(_COLORS)]
        if x.size >= 2:
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{pts}"/>')
        elif x.size == 1:
            out.append(f'<circle cx="{_fmt(px(x[0]))}" cy="{_fmt(py(y[0]))}" r="3" fill="{color}"/>')
        out.append(
            f'<text x="{left + pw - 6}" y="{top + 14 + 13 * idx}" text-anchor="end" fill="{color}">{escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def decimate(x, y, max_points=1500):
    """Thin long samples so SVG files stay small; keeps both endpoints."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.size <= max_points:
        return x, y
    idx = np.unique(np.linspace(0, x.size - 1, max_points).round().astype(int))
    return x[idx], y[idx]


def finite_or_none(v):
    return v if (v is not None and math.isfinite(v)) else None
