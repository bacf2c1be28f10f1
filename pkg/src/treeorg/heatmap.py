"""Deterministic SVG heatmaps of reordered matrices.

No plotting library: rectangles are emitted directly with a fixed
two-color ramp, so the same inputs always produce the same bytes.
"""

from __future__ import annotations

import numpy as np

from .core import as_values

LOW_COLOR = "#2166ac"  # ramp endpoint for the matrix minimum
HIGH_COLOR = "#b2182b"  # ramp endpoint for the matrix maximum

ANNOTATION_PALETTE = (
    "#66c2a5", "#fc8d62", "#8da0cb", "#e78ac3",
    "#a6d854", "#ffd92f", "#e5c494", "#b3b3b3",
)


def _hex_to_rgb(color: str):
    return tuple(int(color[i : i + 2], 16) for i in (1, 3, 5))


def _ramp(fraction: float) -> str:
    lo = _hex_to_rgb(LOW_COLOR)
    hi = _hex_to_rgb(HIGH_COLOR)
    rgb = tuple(round(l + (h - l) * fraction) for l, h in zip(lo, hi))
    return "#%02x%02x%02x" % rgb


def _check_order(order, size, name) -> np.ndarray:
    order = np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(size)):
        raise ValueError(f"{name} must be a permutation of range({size})")
    return order


def render_heatmap(
    data,
    row_order=None,
    col_order=None,
    annotations=None,
    cell: int = 6,
) -> str:
    """Render a matrix as an SVG string.

    Rows and columns are drawn in the given orders (identity by
    default).  `annotations` is an optional list of (name, labels)
    pairs, labels aligned to the original column indices; each becomes
    a colored strip under the matrix, colors assigned to the sorted
    unique labels from a fixed palette.
    """
    vals = as_values(data)
    n_rows, n_cols = vals.shape
    row_order = (
        np.arange(n_rows) if row_order is None else _check_order(row_order, n_rows, "row_order")
    )
    col_order = (
        np.arange(n_cols) if col_order is None else _check_order(col_order, n_cols, "col_order")
    )
    ordered = vals[np.ix_(row_order, col_order)]

    lo = float(ordered.min())
    hi = float(ordered.max())
    span = hi - lo if hi > lo else 1.0

    annotations = list(annotations or [])
    strip_h = cell
    gap = max(2, cell // 2)
    height = n_rows * cell + (strip_h + gap) * len(annotations)
    width = n_cols * cell

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for r in range(n_rows):
        for c in range(n_cols):
            frac = (ordered[r, c] - lo) / span
            parts.append(
                f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
                f'fill="{_ramp(frac)}"/>'
            )
    y = n_rows * cell + gap
    for name, labels in annotations:
        labels = list(labels)
        if len(labels) != n_cols:
            raise ValueError(f"annotation {name!r} must label every column")
        palette = {
            lab: ANNOTATION_PALETTE[i % len(ANNOTATION_PALETTE)]
            for i, lab in enumerate(sorted(set(map(str, labels))))
        }
        for c in range(n_cols):
            lab = str(labels[col_order[c]])
            parts.append(
                f'<rect x="{c * cell}" y="{y}" width="{cell}" height="{strip_h}" '
                f'fill="{palette[lab]}"><title>{name}: {lab}</title></rect>'
            )
        y += strip_h + gap
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_heatmap(data, path, **kwargs) -> None:
    svg = render_heatmap(data, **kwargs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
