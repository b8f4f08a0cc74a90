"""Minimal deterministic SVG emission: heatmaps, region maps, line profiles.

No plotting dependency; fixed viewBox, fixed color ramps, no timestamps, so
identical inputs produce identical bytes.
"""

from __future__ import annotations

import math

import numpy as np

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 90, 40, 50

# compact blue->green->yellow ramp, piecewise linear
_RAMP = [(0.0, (68, 1, 84)), (0.25, (59, 82, 139)), (0.5, (33, 145, 140)),
         (0.75, (94, 201, 98)), (1.0, (253, 231, 37))]

_CATEGORY_COLORS = {
    "sn": "#1f77b4", "cn": "#ff7f0e", "dn": "#2ca02c", "ns": "#d62728",
    "cs": "#9467bd", "ds": "#8c564b", "sn*": "#e377c2", "ns*": "#17becf",
    "const": "#7f7f7f", "lin": "#bcbd22", "": "#dddddd",
}


def _ramp_color(frac: float) -> str:
    frac = min(max(frac, 0.0), 1.0)
    for (f0, c0), (f1, c1) in zip(_RAMP[:-1], _RAMP[1:]):
        if frac <= f1:
            w = 0.0 if f1 == f0 else (frac - f0) / (f1 - f0)
            rgb = tuple(round(a + w * (b - a)) for a, b in zip(c0, c1))
            return "#%02x%02x%02x" % rgb
    return "#%02x%02x%02x" % _RAMP[-1][1]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="monospace">{title}</text>',
    ]


def _axes(xlo, xhi, ylo, yhi, xlabel, ylabel) -> list:
    parts = [
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle" font-size="13" '
        f'font-family="monospace">{xlabel}</text>',
        f'<text x="16" y="{_H / 2}" text-anchor="middle" font-size="13" '
        f'font-family="monospace" transform="rotate(-90 16 {_H / 2})">{ylabel}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        x = _ML + frac * (_W - _ML - _MR)
        y = _H - _MB + 16
        parts.append(f'<text x="{x:.1f}" y="{y}" text-anchor="middle" font-size="11" '
                     f'font-family="monospace">{_fmt(xlo + frac * (xhi - xlo))}</text>')
        yy = _H - _MB - frac * (_H - _MT - _MB)
        parts.append(f'<text x="{_ML - 6}" y="{yy:.1f}" text-anchor="end" font-size="11" '
                     f'font-family="monospace">{_fmt(ylo + frac * (yhi - ylo))}</text>')
    return parts


def _cell_geometry(ts, vs):
    nx, ny = len(ts), len(vs)
    w = (_W - _ML - _MR) / nx
    h = (_H - _MT - _MB) / ny
    return nx, ny, w, h


def heatmap_svg(ts, vs, Z, title: str, xlabel: str = "t", ylabel: str = "v") -> str:
    """Z[it, iv] colored over the grid; NaN cells light gray."""
    ts, vs, Z = np.asarray(ts), np.asarray(vs), np.asarray(Z, dtype=float)
    finite = Z[np.isfinite(Z)]
    zlo, zhi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if zhi - zlo < 1e-300:
        zhi = zlo + 1.0
    parts = _header(title)
    nx, ny, w, h = _cell_geometry(ts, vs)
    for i in range(nx):
        for j in range(ny):
            x = _ML + i * w
            y = _H - _MB - (j + 1) * h
            z = Z[i, j]
            color = "#eeeeee" if not math.isfinite(z) else _ramp_color((z - zlo) / (zhi - zlo))
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
                         f'fill="{color}"/>')
    parts += _axes(ts[0], ts[-1], vs[0], vs[-1], xlabel, ylabel)
    for frac in (0.0, 0.5, 1.0):
        y = _H - _MB - frac * (_H - _MT - _MB)
        parts.append(f'<rect x="{_W - _MR + 18}" y="{y - 6:.1f}" width="14" height="8" '
                     f'fill="{_ramp_color(frac)}"/>')
        parts.append(f'<text x="{_W - _MR + 36}" y="{y + 2:.1f}" font-size="10" '
                     f'font-family="monospace">{_fmt(zlo + frac * (zhi - zlo))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def region_svg(ts, vs, tags, title: str) -> str:
    parts = _header(title)
    nx, ny, w, h = _cell_geometry(ts, vs)
    seen = []
    for i in range(nx):
        for j in range(ny):
            tag = str(tags[i, j])
            color = _CATEGORY_COLORS.get(tag, "#000000")
            if tag and tag not in seen:
                seen.append(tag)
            x = _ML + i * w
            y = _H - _MB - (j + 1) * h
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
                         f'fill="{color}"/>')
    parts += _axes(ts[0], ts[-1], vs[0], vs[-1], "t", "v")
    for k, tag in enumerate(sorted(seen)):
        y = _MT + 14 * (k + 1)
        parts.append(f'<rect x="{_W - _MR + 18}" y="{y - 8}" width="10" height="10" '
                     f'fill="{_CATEGORY_COLORS.get(tag, "#000000")}"/>')
        parts.append(f'<text x="{_W - _MR + 32}" y="{y}" font-size="11" '
                     f'font-family="monospace">{tag}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def profiles_svg(xs, curves, title: str, xlabel: str = "x", ylabel: str = "phi") -> str:
    """curves: list of (label, y-array)."""
    xs = np.asarray(xs, dtype=float)
    ylo = min(float(np.min(y)) for _, y in curves)
    yhi = max(float(np.max(y)) for _, y in curves)
    if yhi - ylo < 1e-300:
        yhi = ylo + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    parts = _header(title)
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
    for k, (label, y) in enumerate(curves):
        y = np.asarray(y, dtype=float)
        pts = []
        for xi, yi in zip(xs, y):
            px = _ML + (xi - xs[0]) / (xs[-1] - xs[0]) * (_W - _ML - _MR)
            py = _H - _MB - (yi - ylo) / (yhi - ylo) * (_H - _MT - _MB)
            pts.append(f"{px:.2f},{py:.2f}")
        color = palette[k % len(palette)]
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                     'stroke-width="1.5"/>')
        parts.append(f'<text x="{_W - _MR + 14}" y="{_MT + 14 * (k + 1)}" font-size="11" '
                     f'font-family="monospace" fill="{color}">{label}</text>')
    parts += _axes(xs[0], xs[-1], ylo, yhi, xlabel, ylabel)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(xs, ys, zs, title: str, xlabel: str, ylabel: str) -> str:
    xs, ys, zs = (np.asarray(a, dtype=float) for a in (xs, ys, zs))
    if xs.size == 0:
        return "\n".join(_header(title) + ["</svg>"]) + "\n"
    xlo, xhi = float(xs.min()), float(xs.max())
    ylo, yhi = float(ys.min()), float(ys.max())
    zlo, zhi = float(zs.min()), float(zs.max())
    if xhi - xlo < 1e-300:
        xhi = xlo + 1.0
    if yhi - ylo < 1e-300:
        yhi = ylo + 1.0
    if zhi - zlo < 1e-300:
        zhi = zlo + 1.0
    parts = _header(title)
    for x, y, z in zip(xs, ys, zs):
        px = _ML + (x - xlo) / (xhi - xlo) * (_W - _ML - _MR)
        py = _H - _MB - (y - ylo) / (yhi - ylo) * (_H - _MT - _MB)
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2" '
                     f'fill="{_ramp_color((z - zlo) / (zhi - zlo))}"/>')
    parts += _axes(xlo, xhi, ylo, yhi, xlabel, ylabel)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
