"""Local refinement of one tree within the folders of the other.

A coarse observation folder may hide sub-populations whose feature
organization differs from the global one.  For each folder at a chosen
level of the observation tree, the features are re-measured with the
metric restricted to that branch (branch-indicator weights), the
observations inside the folder are re-organized against those local
feature trees, and the refined branch replaces the original one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biorg import BiOrgConfig, _iterate_pair
from .core import PartitionTree, as_values, ensure_valid, tree_from_partitions, trivial_tree
from .flexible import build_flexible_tree
from .metrics import folder_weights, pairwise_distances
from .transforms import apply_to_rows, build_difference


def difference_energy(tree: PartitionTree, data) -> np.ndarray:
    """Per-folder l2 energy of the difference coefficients of `data`.

    High-energy folders concentrate the matrix's variation; levels with
    several energetic folders are natural refinement targets.  Rows of
    `data` must lie on the tree's axis.
    """
    coeff = apply_to_rows(build_difference(tree), as_values(data))
    return np.sqrt(np.sum(coeff * coeff, axis=1))


def merge_subtree(tree: PartitionTree, folder_id: int, local: PartitionTree) -> PartitionTree:
    """Replace the branch under one folder with a locally built tree.

    Local tree leaves map to the folder's members in sorted order.  If
    the local tree is deeper than the folder's level, every other
    branch is padded with pass-through copies so the result keeps
    uniform depth; folder ids are reassigned canonically.
    """
    ensure_valid(tree)
    ensure_valid(local)
    if folder_id not in tree.folders:
        raise ValueError(f"no folder with id {folder_id}")
    branch = tree.folders[folder_id]
    members = branch.members
    if local.axis_size != len(members):
        raise ValueError(
            f"local tree covers {local.axis_size} elements but the folder has {len(members)}"
        )
    mapping = dict(enumerate(members))
    level = branch.level
    pad = max(0, local.n_levels - level)
    new_top = tree.n_levels + pad

    def local_partition(g: int) -> list[tuple[int, ...]]:
        lv = min(g, local.n_levels)
        return [
            tuple(sorted(mapping[x] for x in f.members))
            for f in local.folders_at_level(lv)
        ]

    member_set = set(members)
    partitions = []
    for g in range(new_top + 1):
        if g > level + pad:
            parts = [f.members for f in tree.folders_at_level(g - pad)]
        else:
            old_level = min(g, level)
            parts = [
                f.members
                for f in tree.folders_at_level(old_level)
                if not set(f.members) <= member_set
            ]
            parts.extend(local_partition(g))
        partitions.append(parts)
    return tree_from_partitions(tree.axis_size, partitions)


@dataclass(frozen=True)
class RefinementResult:
    tree: PartitionTree
    feature_trees: tuple[PartitionTree, ...]
    folder_ids: tuple[int, ...]


def local_refine(data, tree_y: PartitionTree, level: int, config: BiOrgConfig | None = None) -> RefinementResult:
    """Refine the observation tree inside each folder at one level.

    Returns the refined observation tree together with one feature tree
    per refined folder (each over all features, built from that
    folder's branch-restricted metric).  Levels 1..L-1 are refinable.
    """
    if config is None:
        config = BiOrgConfig()
    values = as_values(data)
    ensure_valid(tree_y)
    if values.shape[1] != tree_y.axis_size:
        raise ValueError("matrix columns must lie on the observation tree axis")
    if not 1 <= level <= tree_y.n_levels - 1:
        raise ValueError("refinement level must be strictly between leaves and root")

    folder_ids = tuple(tree_y.levels[level])
    feature_trees: list[PartitionTree] = []
    current = tree_y
    pad_so_far = 0
    for fid in folder_ids:
        branch = tree_y.folders[fid]
        w_branch = folder_weights(tree_y, "branch_indicator", branch_root=fid)
        d_feat = pairwise_distances(tree_y, w_branch, values, axis="rows", threads=config.threads)
        tree_x_local = build_flexible_tree(d_feat, config.tree_x)

        if branch.size == 1:
            local = trivial_tree(1)
        else:
            sub = values[:, list(branch.members)]
            local = None
            best = None
            for tx, ty, c in _iterate_pair(sub, tree_x_local, config):
                if (
                    config.stopping == "coherence_decrease"
                    and best is not None
                    and c >= best
                ):
                    break
                best = c
                tree_x_local, local = tx, ty
            if local is None:
                local = trivial_tree(branch.size)
        feature_trees.append(tree_x_local)

        # after earlier merges the folder sits `pad_so_far` levels higher
        shifted = level + pad_so_far
        target = next(
            i
            for i in current.levels[shifted]
            if current.folders[i].members == branch.members
        )
        before = current.n_levels
        current = merge_subtree(current, target, local)
        pad_so_far += current.n_levels - before

    return RefinementResult(tree=current, feature_trees=tuple(feature_trees), folder_ids=folder_ids)
