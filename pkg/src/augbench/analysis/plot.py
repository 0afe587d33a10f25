"""Dependency-free SVG scatter of a 2-D projection, plus a CSV of its coordinates."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..corpus import Label, Source
from .tsne import Projection2D

RED = "#d62728"
GREEN = "#2ca02c"
BLUES = ["#1f77b4", "#6baed6", "#08306b", "#9ecae1"]

WIDTH, HEIGHT, MARGIN, LEGEND_W = 640, 480, 30, 260


def _parse_tag(tag) -> tuple[Source, Label]:
    source, label = tag
    return Source(source), (label if isinstance(label, Label) else Label.parse(label))


def group_key(tag) -> tuple[Source, Label]:
    return _parse_tag(tag)


def group_name(source: Source, label: Label) -> str:
    cls = "Gender-based HS" if label is Label.POSITIVE else "Non-gender-based HS"
    return f"{source.display} ({cls})"


def group_colors(groups) -> dict[tuple[Source, Label], str]:
    """Original Positive red, original Negative green, augmented groups in blues."""
    colors, blue = {}, 0
    for g in sorted(groups, key=lambda g: (list(Source).index(g[0]), g[1].value)):
        src, lab = g
        if src is Source.ORIGINAL:
            colors[g] = RED if lab is Label.POSITIVE else GREEN
        else:
            colors[g] = BLUES[blue % len(BLUES)]
            blue += 1
    return colors


def emit_scatter(proj: Projection2D, path, title: str | None = None) -> tuple[Path, Path]:
    """Write ``path`` (SVG) and a sibling ``.csv``; returns both paths."""
    path = Path(path)
    coords = np.asarray(proj.coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2 or not np.all(np.isfinite(coords)):
        raise ValueError("projection coordinates must be a finite n x 2 array")
    keys = [group_key(t) for t in proj.tags]
    colors = group_colors(set(keys))

    lo, hi = coords.min(axis=0), coords.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    px = MARGIN + (coords[:, 0] - lo[0]) / span[0] * plot_w
    py = HEIGHT - MARGIN - (coords[:, 1] - lo[1]) / span[1] * plot_h

    total_w = WIDTH + LEGEND_W
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{HEIGHT}" '
        f'viewBox="0 0 {total_w} {HEIGHT}">',
        f'<rect x="0" y="0" width="{total_w}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN}" y="18" font-family="sans-serif" font-size="13">'
                   f'{escape(title)}</text>')
    out.append('<g class="points">')
    # originals first so augmented points sit on top
    order = sorted(range(len(keys)), key=lambda i: (keys[i][0] is not Source.ORIGINAL, i))
    for i in order:
        out.append(f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="3" fill="{colors[keys[i]]}" '
                   f'fill-opacity="0.75"><title>{escape(proj.ids[i])}</title></circle>')
    out.append("</g>")
    out.append('<g class="legend">')
    for j, (g, color) in enumerate(colors.items()):
        y = MARGIN + 20 * j
        out.append(f'<rect x="{WIDTH + 10}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{WIDTH + 26}" y="{y}" font-family="sans-serif" font-size="11">'
                   f'{escape(group_name(*g))}</text>')
    out.append("</g>")
    out.append("</svg>")

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    csv_path = path.with_suffix(".csv")
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "source", "label"])
        for i, (src, lab) in enumerate(keys):
            w.writerow([proj.ids[i], repr(float(coords[i, 0])), repr(float(coords[i, 1])),
                        src.value, lab.value])
    return path, csv_path
