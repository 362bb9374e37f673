"""Tiny dependency-free SVG line plots for the command line outputs."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#c0392b", "#2471a3", "#229954", "#7d3c98", "#d68910", "#566573")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step / 2, step)


def line_plot(path, series, *, title="", xlabel="", ylabel="", width=640, height=400,
              hline=None):
    """Write ``series`` (iterable of ``(x, y, label)``) as an SVG line chart."""
    ml, mr, mt, mb = 70, 20, 35, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = ys[np.isfinite(ys)]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if hline is not None:
        y0, y1 = min(y0, hline), max(y1, hline)
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    if x1 == x0:
        x1 = x0 + 1.0

    def X(v):
        return ml + (np.asarray(v, float) - x0) / (x1 - x0) * pw

    def Y(v):
        return mt + (1 - (np.asarray(v, float) - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="15" y="{mt + ph / 2}" text-anchor="middle" '
           f'transform="rotate(-90 15 {mt + ph / 2})">{escape(ylabel)}</text>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{X(t):.1f}" y1="{mt + ph}" x2="{X(t):.1f}" y2="{mt + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{X(t):.1f}" y="{mt + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 5}" y1="{Y(t):.1f}" x2="{ml}" y2="{Y(t):.1f}" stroke="#333"/>')
        out.append(f'<text x="{ml - 8}" y="{Y(t) + 4:.1f}" text-anchor="end">{t:.4g}</text>')
    if hline is not None:
        out.append(f'<line x1="{ml}" y1="{Y(hline):.1f}" x2="{ml + pw}" y2="{Y(hline):.1f}" '
                   f'stroke="#999" stroke-dasharray="4 3"/>')
    for k, (x, y, label) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(y)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X(x[ok]), Y(y[ok])))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 15 + 16 * k
        out.append(f'<line x1="{ml + pw - 150}" y1="{ly}" x2="{ml + pw - 125}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw - 120}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
