"""Synthetic matrices with planted block and hierarchical structure."""

from __future__ import annotations

import numpy as np

from .core import DataMatrix, PartitionTree, tree_from_partitions


def _split_sizes(n: int, k: int) -> np.ndarray:
    if not 1 <= k <= n:
        raise ValueError("cluster count must be between 1 and the axis size")
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    return sizes


def _shuffled_labels(n: int, k: int, rng) -> np.ndarray:
    labels = np.repeat(np.arange(k), _split_sizes(n, k))
    return labels[rng.permutation(n)]


def planted_blocks(
    n_rows: int,
    n_cols: int,
    k_rows: int,
    k_cols: int,
    noise: float = 0.5,
    rng=None,
):
    """Matrix of k_rows x k_cols constant blocks plus Gaussian noise.

    Rows and columns are shuffled so nothing about the planted structure
    survives in the index order.  Block means are standard normal draws.
    Returns (DataMatrix, row_labels, col_labels).
    """
    rng = np.random.default_rng(rng)
    row_labels = _shuffled_labels(n_rows, k_rows, rng)
    col_labels = _shuffled_labels(n_cols, k_cols, rng)
    means = rng.normal(size=(k_rows, k_cols))
    z = means[np.ix_(row_labels, col_labels)] + noise * rng.normal(size=(n_rows, n_cols))
    return DataMatrix(z), row_labels, col_labels


def planted_hierarchical(
    n_rows: int,
    n_cols: int,
    k_rows: int = 3,
    k_cols: int = 3,
    sub: int = 2,
    noise: float = 0.2,
    sub_amplitude: float = 0.45,
    rng=None,
):
    """Coarse blocks with sub-structure that differs across blocks.

    On top of a k_rows x k_cols coarse block matrix, every coarse
    column cluster splits its observations into `sub` sub-clusters and
    flips them against a feature split drawn independently for that
    cluster; the transposed analog is added for the row clusters.
    Because the fine splits disagree across clusters, no single global
    ordering of either axis aligns all of them, which is exactly the
    regime where refining a tree inside its folders pays off.

    Returns (DataMatrix, labels) where labels holds coarse and fine
    labels for both axes.
    """
    rng = np.random.default_rng(rng)
    row_coarse = _shuffled_labels(n_rows, k_rows, rng)
    col_coarse = _shuffled_labels(n_cols, k_cols, rng)
    means = rng.normal(size=(k_rows, k_cols))
    z = means[np.ix_(row_coarse, col_coarse)].astype(np.float64)

    col_fine = np.zeros(n_cols, dtype=np.int64)
    for g in range(k_cols):
        idx = np.flatnonzero(col_coarse == g)
        fine = _shuffled_labels(idx.size, min(sub, idx.size), rng)
        col_fine[idx] = fine
        row_split = rng.integers(0, 2, size=n_rows) * 2 - 1
        z[:, idx] += sub_amplitude * np.outer(row_split, 2.0 * (fine % 2) - 1.0)

    row_fine = np.zeros(n_rows, dtype=np.int64)
    for g in range(k_rows):
        idx = np.flatnonzero(row_coarse == g)
        fine = _shuffled_labels(idx.size, min(sub, idx.size), rng)
        row_fine[idx] = fine
        col_split = rng.integers(0, 2, size=n_cols) * 2 - 1
        z[idx, :] += sub_amplitude * np.outer(2.0 * (fine % 2) - 1.0, col_split)

    z += noise * rng.normal(size=(n_rows, n_cols))
    labels = {
        "row_coarse": row_coarse,
        "row_fine": row_fine,
        "col_coarse": col_coarse,
        "col_fine": col_fine,
    }
    return DataMatrix(z), labels


def random_partition_tree(n: int, rng=None, max_group: int = 4) -> PartitionTree:
    """A random valid tree over n indices, for property tests.

    Each level groups the previous level's folders into runs of random
    length (singleton runs become pass-throughs); at least one real
    merge per level keeps the construction terminating.
    """
    rng = np.random.default_rng(rng)
    if n < 1:
        raise ValueError("n must be >= 1")
    current: list[tuple[int, ...]] = [(i,) for i in range(n)]
    partitions = [list(current)]
    while len(current) > 1:
        order = rng.permutation(len(current))
        merged: list[tuple[int, ...]] = []
        i = 0
        while i < len(order):
            width = int(rng.integers(1, max_group + 1))
            chunk = order[i : i + width]
            merged.append(tuple(sorted(x for j in chunk for x in current[j])))
            i += width
        if len(merged) == len(current):  # all runs were singletons; force one merge
            a = merged.pop()
            b = merged.pop()
            merged.append(tuple(sorted(a + b)))
        partitions.append(merged)
        current = merged
    return tree_from_partitions(n, partitions)
