"""Static SVG 1.1 rendering of a functional boxplot."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .outliers import BoxplotSummary

__all__ = ["boxplot_svg"]

WIDTH, HEIGHT = 640, 400
MARGIN = 48


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _depth_color(d: float) -> str:
    # pale grey-blue for shallow curves, deeper blue for central ones
    d = min(max(d, 0.0), 1.0)
    r = int(round(200 - 150 * d))
    g = int(round(210 - 110 * d))
    return f"#{r:02x}{g:02x}e6"


class _Frame:
    def __init__(self, axis, curves):
        self.x0, self.x1 = float(axis[0]), float(axis[-1])
        lo, hi = float(np.min(curves)), float(np.max(curves))
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        self.y0, self.y1 = lo - pad, hi + pad
        self.axis = np.asarray(axis, dtype=float)

    def xs(self):
        return MARGIN + (self.axis - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def ys(self, v):
        return HEIGHT - MARGIN - (np.asarray(v) - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)

    def points(self, v) -> str:
        return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(self.xs(), self.ys(v)))


def boxplot_svg(curves, axis, summary: BoxplotSummary, title: str = "Functional boxplot") -> str:
    """SVG document for ``summary`` drawn over ``curves`` (rows) on ``axis``."""
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    fr = _Frame(axis, curves)
    outliers = set(int(i) for i in summary.outlier_indices)
    depths = np.asarray(summary.depths, dtype=float)
    dmax = depths.max() if depths.size and depths.max() > 0 else 1.0

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{escape(title)}</title>",
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
    ]

    lower, upper = summary.central_band
    band = fr.points(upper) + " " + " ".join(reversed(fr.points(lower).split(" ")))
    out.append(f'<polygon class="central-band" points="{band}" fill="#9ecae1" fill-opacity="0.45" stroke="none"/>')

    out.append('<g class="curves" fill="none" stroke-width="0.8">')
    for i, row in enumerate(curves):
        if i in outliers or i == summary.median_index:
            continue
        color = _depth_color(depths[i] / dmax)
        out.append(f'<polyline class="curve" data-index="{i}" stroke="{color}" points="{fr.points(row)}"/>')
    out.append("</g>")

    wl, wu = summary.whiskers
    for name, v in (("whisker-lower", wl), ("whisker-upper", wu)):
        out.append(f'<polyline class="whisker {name}" fill="none" stroke="#08519c" stroke-width="1.5" '
                   f'stroke-dasharray="5,3" points="{fr.points(v)}"/>')

    for i in sorted(outliers):
        out.append(f'<polyline class="outlier" data-index="{i}" fill="none" stroke="#d62728" '
                   f'stroke-width="1.6" points="{fr.points(curves[i])}"/>')

    m = summary.median_index
    out.append(f'<polyline class="median" data-index="{m}" fill="none" stroke="#000000" '
               f'stroke-width="2.5" points="{fr.points(curves[m])}"/>')

    # axes with end labels
    y_base = HEIGHT - MARGIN
    out.append(f'<line class="axis" x1="{MARGIN}" y1="{y_base}" x2="{WIDTH - MARGIN}" y2="{y_base}" stroke="#333333"/>')
    out.append(f'<line class="axis" x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{y_base}" stroke="#333333"/>')
    labels = [
        (MARGIN, y_base + 16, "middle", fr.x0),
        (WIDTH - MARGIN, y_base + 16, "middle", fr.x1),
        (MARGIN - 6, y_base, "end", fr.y0),
        (MARGIN - 6, MARGIN + 4, "end", fr.y1),
    ]
    for x, y, anchor, v in labels:
        out.append(f'<text x="{x}" y="{_fmt(y)}" font-family="sans-serif" font-size="11" '
                   f'text-anchor="{anchor}">{v:.4g}</text>')
    out.append(f'<text x="{WIDTH // 2}" y="24" font-family="sans-serif" font-size="14" '
               f'text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
