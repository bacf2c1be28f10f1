"""Tree-induced linear transforms.

Each folder I of a partition tree contributes one row:

  structure   S[i, x] = 1 if x in I_i
  averaging   M[i, x] = 1 / |I_i| on members, so (M y)_i is the folder mean
  difference  D[i, x] = M[i, x] - M[parent(i), x], root row kept as M[root]

The difference rows measure how a folder mean departs from its parent
mean; together with S they reconstruct the signal exactly:
y = S^T (D y).  Pass-through folders (same members as their parent)
get explicit all-zero difference rows so every tree level keeps a row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import PartitionTree, as_values, ensure_valid


@dataclass(frozen=True)
class TreeTransform:
    """Sparse (n_folders x axis_size) operator tied to one tree."""

    kind: str
    matrix: sp.csr_matrix
    folder_ids: tuple[int, ...]
    tree: PartitionTree

    @property
    def shape(self):
        return self.matrix.shape

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _triplets(tree: PartitionTree, valuer):
    rows, cols, vals = [], [], []
    for i in range(tree.n_folders):
        f = tree.folders[i]
        for x, v in valuer(f):
            if v != 0.0:
                rows.append(i)
                cols.append(x)
                vals.append(v)
    mat = sp.csr_matrix(
        (vals, (rows, cols)), shape=(tree.n_folders, tree.axis_size), dtype=np.float64
    )
    return mat


def build_structure(tree: PartitionTree) -> TreeTransform:
    ensure_valid(tree)
    mat = _triplets(tree, lambda f: ((x, 1.0) for x in f.members))
    return TreeTransform("structure", mat, tuple(range(tree.n_folders)), tree)


def build_averaging(tree: PartitionTree) -> TreeTransform:
    ensure_valid(tree)
    mat = _triplets(tree, lambda f: ((x, 1.0 / f.size) for x in f.members))
    return TreeTransform("averaging", mat, tuple(range(tree.n_folders)), tree)


def build_difference(tree: PartitionTree) -> TreeTransform:
    ensure_valid(tree)

    def valuer(f):
        if f.parent is None:
            return ((x, 1.0 / f.size) for x in f.members)
        p = tree.folders[f.parent]
        if p.size == f.size:
            return iter(())  # pass-through: explicit zero row
        own = set(f.members)
        pairs = [(x, 1.0 / f.size - 1.0 / p.size) for x in f.members]
        pairs += [(x, -1.0 / p.size) for x in p.members if x not in own]
        return iter(pairs)

    mat = _triplets(tree, valuer)
    return TreeTransform("difference", mat, tuple(range(tree.n_folders)), tree)


def _array_in(data) -> np.ndarray:
    arr = data.values if hasattr(data, "values") else np.asarray(data, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise ValueError("expected a vector or a 2-d array")
    return np.asarray(arr, dtype=np.float64)


def apply_to_rows(transform: TreeTransform, data) -> np.ndarray:
    """Transform along the row axis: rows become folder coefficients.

    A 1-d input is treated as a single signal over the tree axis.
    """
    vals = _array_in(data)
    if vals.shape[0] != transform.matrix.shape[1]:
        raise ValueError(
            f"transform expects {transform.matrix.shape[1]} rows, got {vals.shape[0]}"
        )
    return np.asarray(transform.matrix @ vals)


def apply_to_cols(data, transform: TreeTransform) -> np.ndarray:
    """Transform along the column axis: columns become folder coefficients."""
    vals = _array_in(data)
    if vals.shape[-1] != transform.matrix.shape[1]:
        raise ValueError(
            f"transform expects {transform.matrix.shape[1]} columns, got {vals.shape[-1]}"
        )
    return np.asarray(vals @ transform.matrix.T)


def joint_average(tx: TreeTransform, data, ty: TreeTransform) -> np.ndarray:
    """Folder-pair means: entry (i, j) is the mean of Z over I_i x J_j."""
    if tx.kind != "averaging" or ty.kind != "averaging":
        raise ValueError("joint_average needs two averaging transforms")
    return _joint(tx, data, ty)


def joint_difference(tx: TreeTransform, data, ty: TreeTransform) -> np.ndarray:
    """Joint two-sided difference coefficients D_x Z D_y^T."""
    if tx.kind != "difference" or ty.kind != "difference":
        raise ValueError("joint_difference needs two difference transforms")
    return _joint(tx, data, ty)


def _joint(tx: TreeTransform, data, ty: TreeTransform) -> np.ndarray:
    vals = as_values(data)
    if vals.shape != (tx.matrix.shape[1], ty.matrix.shape[1]):
        raise ValueError(
            f"matrix of shape {vals.shape} does not match trees over "
            f"({tx.matrix.shape[1]}, {ty.matrix.shape[1]})"
        )
    return np.asarray(tx.matrix @ vals @ ty.matrix.T)


def reconstruct(structure: TreeTransform, coefficients) -> np.ndarray:
    """Invert the difference transform: y = S^T (D y)."""
    if structure.kind != "structure":
        raise ValueError("reconstruct needs the structure transform")
    coeff = np.asarray(coefficients, dtype=np.float64)
    if coeff.shape[0] != structure.matrix.shape[0]:
        raise ValueError("coefficient rows do not match folder count")
    return np.asarray(structure.matrix.T @ coeff)


def reconstruct_joint(sx: TreeTransform, coefficients, sy: TreeTransform) -> np.ndarray:
    """Invert the joint difference transform: Z = S_x^T C S_y."""
    if sx.kind != "structure" or sy.kind != "structure":
        raise ValueError("reconstruct_joint needs two structure transforms")
    coeff = np.asarray(coefficients, dtype=np.float64)
    if coeff.shape != (sx.matrix.shape[0], sy.matrix.shape[0]):
        raise ValueError("coefficient shape does not match folder counts")
    return np.asarray(sx.matrix.T @ coeff @ sy.matrix)


def centroids(averaging: TreeTransform, data, axis="rows") -> np.ndarray:
    """Folder centroids of a matrix along the tree's axis.

    axis="rows": result row i is the mean over the folder's rows of Z.
    axis="cols": result column j is the mean over the folder's columns.
    """
    if averaging.kind != "averaging":
        raise ValueError("centroids need the averaging transform")
    vals = as_values(data)
    if axis == "rows":
        if vals.shape[0] != averaging.matrix.shape[1]:
            raise ValueError("row count does not match tree axis size")
        return np.asarray(averaging.matrix @ vals)
    if axis == "cols":
        if vals.shape[1] != averaging.matrix.shape[1]:
            raise ValueError("column count does not match tree axis size")
        return np.asarray(vals @ averaging.matrix.T)
    raise ValueError("axis must be 'rows' or 'cols'")


@dataclass(frozen=True)
class MultiTreeTransform:
    """Stacked averaging rows of several trees over one axis, deduplicated.

    Every tree contributes its full averaging transform; the level-0
    singleton rows and the root row are identical across trees, so only
    the first tree keeps them.  folder_provenance maps each kept row to
    its (tree index, folder id).
    """

    matrix: sp.csr_matrix
    folder_provenance: tuple[tuple[int, int], ...]
    trees: tuple[PartitionTree, ...]


def build_multi_tree(trees) -> MultiTreeTransform:
    trees = tuple(trees)
    if not trees:
        raise ValueError("need at least one tree")
    n = trees[0].axis_size
    for t in trees:
        ensure_valid(t)
        if t.axis_size != n:
            raise ValueError("all trees must share the same axis size")

    blocks, provenance = [], []
    for ti, tree in enumerate(trees):
        avg = build_averaging(tree)
        if ti == 0:
            keep = list(range(tree.n_folders))
        else:
            top = tree.n_levels
            keep = [i for i in range(tree.n_folders) if 0 < tree.folders[i].level < top]
        if keep:
            blocks.append(avg.matrix[keep])
            provenance.extend((ti, i) for i in keep)
    mat = sp.vstack(blocks, format="csr")
    return MultiTreeTransform(mat, tuple(provenance), trees)
