"""Tree-based earth mover's metrics between signals on a tree axis.

The distance between two signals y, y' is a weighted sum of folder-mean
gaps, d(y, y') = sum_I w(I) |mean(y - y', I)|, which equals the l1 norm
of W M (y - y') for the averaging transform M and the diagonal weight
matrix W.  With positive weights it is a metric; weight schemes that
zero some folders give a pseudometric.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .core import PartitionTree, as_values, ensure_valid
from .transforms import MultiTreeTransform, apply_to_rows, build_averaging, build_difference

SCHEMES = ("size_beta", "level_alpha_beta", "data_driven", "branch_indicator")


@dataclass(frozen=True)
class FolderWeights:
    """Non-negative weight per folder, indexed by folder id."""

    scheme: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("weights must be a flat array over folders")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("weights must be finite and non-negative")
        object.__setattr__(self, "values", vals)


def folder_weights(
    tree: PartitionTree,
    scheme: str = "data_driven",
    *,
    beta: float = 0.0,
    alpha: float = 1.0,
    data=None,
    branch_root: int | None = None,
) -> FolderWeights:
    """Build one of the four weight schemes over a tree's folders.

    size_beta         w(I) = (|I|/n) ** beta
    level_alpha_beta  w(I) = 2 ** (-alpha * level(I)) * (|I|/n) ** beta
    data_driven       w(I_i) = l2 norm of row i of the difference
                      coefficients of `data` (tree axis on rows)
    branch_indicator  1 on `branch_root` and its descendants, else 0
    """
    ensure_valid(tree)
    n = tree.axis_size
    sizes = np.array([tree.folders[i].size for i in range(tree.n_folders)], dtype=np.float64)
    if scheme == "size_beta":
        vals = (sizes / n) ** beta
    elif scheme == "level_alpha_beta":
        levels = np.array([tree.folders[i].level for i in range(tree.n_folders)])
        vals = 2.0 ** (-alpha * levels) * (sizes / n) ** beta
    elif scheme == "data_driven":
        if data is None:
            raise ValueError("data_driven weights need the data matrix")
        vals_in = as_values(data)
        if vals_in.shape[0] != n:
            raise ValueError("data rows must lie on the tree axis")
        coeff = apply_to_rows(build_difference(tree), vals_in)
        vals = np.sqrt(np.sum(coeff * coeff, axis=1))
    elif scheme == "branch_indicator":
        if branch_root is None:
            raise ValueError("branch_indicator weights need a branch_root folder id")
        if branch_root not in tree.folders:
            raise ValueError(f"no folder with id {branch_root}")
        vals = np.zeros(tree.n_folders)
        vals[tree.descendants(branch_root)] = 1.0
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}; choose from {SCHEMES}")
    return FolderWeights(scheme, vals)


def _weighted_averaging(tree: PartitionTree, weights: FolderWeights):
    avg = build_averaging(tree)
    if len(weights.values) != tree.n_folders:
        raise ValueError("weight length does not match folder count")
    return avg.matrix.multiply(weights.values[:, None]).tocsr()


def tree_distance(tree: PartitionTree, weights: FolderWeights, y, y_other) -> float:
    """Weighted folder-mean distance between two signals on the tree axis."""
    a = np.asarray(y, dtype=np.float64)
    b = np.asarray(y_other, dtype=np.float64)
    if a.shape != (tree.axis_size,) or b.shape != (tree.axis_size,):
        raise ValueError("signals must be vectors over the tree axis")
    wm = _weighted_averaging(tree, weights)
    return float(np.abs(wm @ (a - b)).sum())


def _tiled_cityblock(points: np.ndarray, threads: int, tile: int = 128) -> np.ndarray:
    m = points.shape[0]
    out = np.empty((m, m))
    starts = list(range(0, m, tile))
    jobs = [(i, j) for i in starts for j in starts if j >= i]

    def block(ij):
        i, j = ij
        bi = points[i : i + tile]
        bj = points[j : j + tile]
        d = cdist(bi, bj, metric="cityblock")
        out[i : i + tile, j : j + tile] = d
        out[j : j + tile, i : i + tile] = d.T

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(block, jobs))
    return out


def pairwise_distances(
    tree: PartitionTree,
    weights: FolderWeights,
    data,
    axis: str = "cols",
    threads: int = 1,
) -> np.ndarray:
    """All pairwise tree distances between the columns (or rows) of a matrix.

    The result does not depend on `threads`; the flag only tiles the
    final cityblock pass across a thread pool.
    """
    vals = as_values(data)
    if axis == "cols":
        signals = vals
    elif axis == "rows":
        signals = vals.T
    else:
        raise ValueError("axis must be 'rows' or 'cols'")
    if signals.shape[0] != tree.axis_size:
        raise ValueError("matrix does not match the tree axis size")
    wm = _weighted_averaging(tree, weights)
    coords = np.asarray((wm @ signals).T)  # one row of folder coefficients per signal
    if threads > 1 and coords.shape[0] > 128:
        d = _tiled_cityblock(coords, threads)
    else:
        d = cdist(coords, coords, metric="cityblock")
    np.fill_diagonal(d, 0.0)
    return d


def joint_distance(
    tree_x: PartitionTree,
    tree_y: PartitionTree,
    weights_x: FolderWeights,
    weights_y: FolderWeights,
    data_a,
    data_b,
) -> float:
    """Two-sided tree distance between two matrices on a shared tree pair."""
    a = as_values(data_a)
    b = as_values(data_b)
    if a.shape != b.shape:
        raise ValueError("matrices must share a shape")
    if a.shape != (tree_x.axis_size, tree_y.axis_size):
        raise ValueError("matrix shape does not match the two tree axes")
    wmx = _weighted_averaging(tree_x, weights_x)
    wmy = _weighted_averaging(tree_y, weights_y)
    return float(np.abs(np.asarray(wmx @ (a - b) @ wmy.T)).sum())


def multi_tree_weight_vector(multi: MultiTreeTransform, weights_per_tree) -> np.ndarray:
    """Per-row weights for a deduplicated multi-tree transform.

    Each kept row gets its own tree's folder weight divided by the tree
    count; the shared singleton and root rows absorb the weights of the
    copies that were dropped, so the weighted transform reproduces the
    average of the per-tree distances exactly.
    """
    trees = multi.trees
    weights_per_tree = list(weights_per_tree)
    if len(weights_per_tree) != len(trees):
        raise ValueError("need one weight set per tree")
    for t, w in zip(trees, weights_per_tree):
        if len(w.values) != t.n_folders:
            raise ValueError("weight length does not match a tree's folder count")
    n_t = len(trees)
    n = trees[0].axis_size
    out = np.empty(multi.matrix.shape[0])
    for r, (ti, fid) in enumerate(multi.folder_provenance):
        w = weights_per_tree[ti].values[fid] / n_t
        if ti == 0:
            f = trees[0].folders[fid]
            if f.level == 0:
                # shared singleton row: leaf x has folder id x in every tree
                w += sum(
                    weights_per_tree[tj].values[f.members[0]] / n_t for tj in range(1, n_t)
                )
            elif f.level == trees[0].n_levels:
                w += sum(
                    weights_per_tree[tj].values[trees[tj].n_folders - 1] / n_t
                    for tj in range(1, n_t)
                )
        out[r] = w
    return out


def multi_tree_distance(multi: MultiTreeTransform, weights_per_tree, y, y_other) -> float:
    """Average of the per-tree distances, computed through the stacked rows."""
    n = multi.trees[0].axis_size
    a = np.asarray(y, dtype=np.float64)
    b = np.asarray(y_other, dtype=np.float64)
    if a.shape != (n,) or b.shape != (n,):
        raise ValueError("signals must be vectors over the shared axis")
    w = multi_tree_weight_vector(multi, weights_per_tree)
    return float(np.abs(w * (multi.matrix @ (a - b))).sum())
