"""Minimal self-contained SVG line plots (linear or logarithmic axes)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 55
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**k for k in range(a, b + 1) if lo <= 10.0**k <= hi] or [lo, hi]
    step = (hi - lo) / 5 if hi > lo else 1.0
    return [lo + i * step for i in range(6)]


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Write an SVG with one polyline per series.

    ``series`` is a list of dicts with keys ``x``, ``y``, ``label`` and
    optionally ``dashed`` and ``markers``.
    """
    xs = [float(v) for s in series for v in s["x"]]
    ys = [float(v) for s in series for v in s["y"]]
    if logx and min(xs) <= 0 or logy and min(ys) <= 0:
        raise ValueError("log axes need positive data")
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    x0, x1 = min(map(tx, xs)), max(map(tx, xs))
    y0, y1 = min(map(ty, ys)), max(map(ty, ys))
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return LEFT + (tx(v) - x0) / (x1 - x0) * (W - LEFT - RIGHT)

    def py(v):
        return H - BOTTOM - (ty(v) - y0) / (y1 - y0) * (H - TOP - BOTTOM)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>']
    xlo, xhi = (10**x0, 10**x1) if logx else (x0, x1)
    ylo, yhi = (10**y0, 10**y1) if logy else (y0, y1)
    for v in _ticks(xlo, xhi, logx):
        out.append(f'<text x="{px(v):.1f}" y="{H - BOTTOM + 18}" text-anchor="middle" font-size="11">{v:.4g}</text>')
    for v in _ticks(ylo, yhi, logy):
        out.append(f'<text x="{LEFT - 6}" y="{py(v) + 4:.1f}" text-anchor="end" font-size="11">{v:.4g}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {H / 2})">{escape(ylabel)}</text>')
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{px(float(a)):.2f},{py(float(b)):.2f}" for a, b in zip(s["x"], s["y"]))
        dash = ' stroke-dasharray="6,4"' if s.get("dashed") else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
        if s.get("markers"):
            for a, b in zip(s["x"], s["y"]):
                out.append(f'<circle cx="{px(float(a)):.2f}" cy="{py(float(b)):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 16 * (i + 1)
        out.append(f'<line x1="{W - 190}" y1="{ly - 4}" x2="{W - 165}" y2="{ly - 4}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{W - 160}" y="{ly}" font-size="12">{escape(s.get("label", ""))}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path
