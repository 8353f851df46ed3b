"""Hand-written SVG figures: the clustered embedding and per-cluster explanation panels.

Output is plain text with fixed number formatting, so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

# 12-colour qualitative palette, cycled by cluster id
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a",
)

SCATTER_W, SCATTER_H = 800, 600
PANEL_W, PANEL_H = 200, 150


def _f(x: float) -> str:
    return f"{x:.2f}"


def _header(w: int, h: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]


def scatter_svg(coords: np.ndarray, assignment: np.ndarray, sizes: list[int],
                title: str = "") -> str:
    """Embedding points coloured by cluster, with a legend of cluster ids and sizes."""
    coords = np.asarray(coords, dtype=float)
    left, top, right, bottom = 40.0, 40.0, 620.0, 560.0
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scale = min((right - left) / span[0], (bottom - top) / span[1])
    # centre the (aspect-preserving) plot inside its box
    ox = left + ((right - left) - span[0] * scale) / 2
    oy = bottom - ((bottom - top) - span[1] * scale) / 2
    out = _header(SCATTER_W, SCATTER_H)
    if title:
        out.append(f'<text x="{SCATTER_W / 2:.0f}" y="24" font-size="16" '
                   f'text-anchor="middle">{escape(title)}</text>')
    out.append(f'<rect x="{_f(left)}" y="{_f(top)}" width="{_f(right - left)}" '
               f'height="{_f(bottom - top)}" fill="none" stroke="#cccccc"/>')
    out.append('<g class="points">')
    for (x, y), c in zip(coords, assignment):
        px = ox + (x - lo[0]) * scale
        py = oy - (y - lo[1]) * scale
        out.append(f'<circle class="point" cx="{_f(px)}" cy="{_f(py)}" r="2.5" '
                   f'fill="{PALETTE[int(c) % len(PALETTE)]}" fill-opacity="0.8"/>')
    out.append("</g>")
    out.append('<g class="legend">')
    for i, size in enumerate(sizes):
        y = 60 + 22 * i
        out.append(
            f'<g class="legend-entry"><rect x="640" y="{y - 11}" width="14" height="14" '
            f'fill="{PALETTE[i % len(PALETTE)]}"/>'
            f'<text x="662" y="{y}" font-size="13">cluster {i} (n={size})</text></g>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _gauss(xs: np.ndarray, mean: float, var: float) -> np.ndarray:
    return np.exp(-((xs - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)


def _path(xs, ys) -> str:
    return "M " + " L ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))


def _numeric_panel(x0, y0, cluster, glob, weight, color) -> list[str]:
    g_mean, g_var = glob["mean"], glob["variance"]
    c_mean, c_var = cluster["mean"], cluster["variance"]
    g_sd = math.sqrt(g_var) if g_var > 0 else 1.0
    floor = (g_sd * 1e-2) ** 2
    g_var, c_var = max(g_var, floor), max(c_var, floor)
    lo = min(g_mean - 3.5 * math.sqrt(g_var), c_mean - 3.5 * math.sqrt(c_var))
    hi = max(g_mean + 3.5 * math.sqrt(g_var), c_mean + 3.5 * math.sqrt(c_var))
    xs = np.linspace(lo, hi, 121)
    g = _gauss(xs, g_mean, g_var)
    c = weight * _gauss(xs, c_mean, c_var)
    ymax = max(g.max(), c.max())
    px = x0 + 10 + (xs - lo) / (hi - lo) * (PANEL_W - 20)

    def py(v):
        return y0 + PANEL_H - 22 - v / ymax * (PANEL_H - 50)

    base = y0 + PANEL_H - 22
    fill = f"M {_f(px[0])},{_f(base)} " + " ".join(
        f"L {_f(a)},{_f(b)}" for a, b in zip(px, py(c))) + f" L {_f(px[-1])},{_f(base)} Z"
    return [
        f'<path d="{fill}" fill="{color}" fill-opacity="0.3" stroke="none"/>',
        f'<path class="global" d="{_path(px, py(g))}" fill="none" stroke="black" stroke-width="1.2"/>',
        f'<path class="cluster" d="{_path(px, py(c))}" fill="none" stroke="{color}" '
        f'stroke-width="1.2" stroke-dasharray="4,3"/>',
        f'<line x1="{_f(x0 + 10)}" y1="{_f(base)}" x2="{_f(x0 + PANEL_W - 10)}" y2="{_f(base)}" stroke="#888888"/>',
        f'<text x="{_f(x0 + 10)}" y="{_f(base + 14)}" font-size="9">{lo:.3g}</text>',
        f'<text x="{_f(x0 + PANEL_W - 10)}" y="{_f(base + 14)}" font-size="9" text-anchor="end">{hi:.3g}</text>',
    ]


def _categorical_panel(x0, y0, cluster, glob, color) -> list[str]:
    labels = list(glob["frequencies"])
    g = [glob["frequencies"][k] for k in labels]
    c = [cluster["frequencies"].get(k, 0.0) for k in labels]
    ymax = max(max(g), max(c), 1e-12)
    base = y0 + PANEL_H - 22
    slot = (PANEL_W - 20) / max(len(labels), 1)
    bar = slot * 0.4
    out = [f'<line x1="{_f(x0 + 10)}" y1="{_f(base)}" x2="{_f(x0 + PANEL_W - 10)}" y2="{_f(base)}" stroke="#888888"/>']
    for i, label in enumerate(labels):
        bx = x0 + 10 + i * slot + slot * 0.1
        for j, (v, fill) in enumerate(((g[i], "#999999"), (c[i], color))):
            h = v / ymax * (PANEL_H - 50)
            cls = "global" if j == 0 else "cluster"
            out.append(f'<rect class="{cls}" x="{_f(bx + j * bar)}" y="{_f(base - h)}" '
                       f'width="{_f(bar)}" height="{_f(h)}" fill="{fill}"/>')
        if len(labels) <= 12:
            out.append(f'<text x="{_f(bx + bar)}" y="{_f(base + 12)}" font-size="8" '
                       f'text-anchor="middle">{escape(str(label))[:6]}</text>')
    return out


def explanations_svg(result: dict) -> str:
    """Grid of explanation panels, one row per cluster, one column per attribute.

    Numeric panels show the global Gaussian (solid) and the cluster Gaussian
    (dashed) scaled by the cluster's share of the points. Categorical panels
    show global and cluster category frequencies side by side.
    """
    clusters = result["pwx"]["clusters"]
    n = result["dataset"]["n"]
    cols = max(1, max((len(c["explanations"]) for c in clusters), default=1))
    w, h = cols * PANEL_W, max(1, len(clusters)) * PANEL_H
    out = _header(w, h)
    for row, cl in enumerate(clusters):
        color = PALETTE[cl["color_index"]]
        for col, ex in enumerate(cl["explanations"]):
            x0, y0 = col * PANEL_W, row * PANEL_H
            out.append(f'<g class="panel" data-cluster="{cl["id"]}" '
                       f'data-attribute="{escape(ex["attribute"], {chr(34): "&quot;"})}">')
            out.append(f'<rect x="{x0 + 2}" y="{y0 + 2}" width="{PANEL_W - 4}" height="{PANEL_H - 4}" '
                       f'fill="none" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{x0 + 10}" y="{y0 + 18}" font-size="11">'
                       f'c{cl["id"]}: {escape(ex["attribute"])} (I={ex["information"]:.3g})</text>')
            if "mean" in ex["cluster_summary"]:
                out += _numeric_panel(x0, y0, ex["cluster_summary"], ex["global_summary"],
                                      cl["size"] / n, color)
            else:
                out += _categorical_panel(x0, y0, ex["cluster_summary"], ex["global_summary"], color)
            out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
