"""Minimal deterministic SVG output: posterior histograms and raster masks."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["histogram_svg", "mask_svg"]


def _num(x: float) -> str:
    return f"{x:.2f}"


def histogram_svg(samples, title: str, bins: int = 40, width: int = 480, height: int = 300) -> str:
    """Histogram of ``samples`` as a standalone SVG document."""
    x = np.asarray(samples, dtype=float)
    counts, edges = np.histogram(x, bins=bins)
    pad_l, pad_r, pad_t, pad_b = 50, 10, 30, 40
    w = width - pad_l - pad_r
    h = height - pad_t - pad_b
    top = max(int(counts.max()), 1) if counts.size else 1
    bw = w / len(counts)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for i, c in enumerate(counts):
        bh = h * c / top
        parts.append(f'<rect x="{_num(pad_l + i * bw)}" y="{_num(pad_t + h - bh)}" '
                     f'width="{_num(bw)}" height="{_num(bh)}" fill="steelblue" stroke="white"/>')
    parts.append(f'<line x1="{pad_l}" y1="{pad_t + h}" x2="{pad_l + w}" y2="{pad_t + h}" stroke="black"/>')
    for frac, v in ((0.0, edges[0]), (0.5, 0.5 * (edges[0] + edges[-1])), (1.0, edges[-1])):
        parts.append(f'<text x="{_num(pad_l + frac * w)}" y="{pad_t + h + 16}" text-anchor="middle" '
                     f'font-size="11">{v:.4g}</text>')
    parts.append(f'<text x="{pad_l - 6}" y="{pad_t + 4}" text-anchor="end" font-size="11">{top}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def mask_svg(suitable, invaded, scale: float = 2.0) -> str:
    """Render habitat (light green) and invaded cells (red); row 0 at the bottom."""
    suitable = np.asarray(suitable, dtype=bool)
    invaded = np.asarray(invaded, dtype=bool)
    ny, nx = suitable.shape
    W, H = nx * scale, ny * scale
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(W)}" height="{_num(H)}" '
             f'viewBox="0 0 {_num(W)} {_num(H)}" shape-rendering="crispEdges">',
             f'<rect x="0" y="0" width="{_num(W)}" height="{_num(H)}" fill="#eeeeee"/>']
    for grid, colour in ((suitable, "#b7dfa0"), (invaded, "#c0392b")):
        for i in range(ny):
            row = grid[i]
            y = (ny - 1 - i) * scale
            # one rect per horizontal run of set cells
            j = 0
            while j < nx:
                if not row[j]:
                    j += 1
                    continue
                k = j
                while k < nx and row[k]:
                    k += 1
                parts.append(f'<rect x="{_num(j * scale)}" y="{_num(y)}" width="{_num((k - j) * scale)}" '
                             f'height="{_num(scale)}" fill="{colour}"/>')
                j = k
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
