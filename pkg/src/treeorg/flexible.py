"""Bottom-up flexible partition trees from a distance matrix.

Level 0 holds the singletons.  At each level the current units are
embedded by diffusion, a merge pass groups units whose embedded
distance clears a data-driven threshold (the median pairwise distance
divided by epsilon), and the merged units become the next level's
units, located at the size-weighted centroids of their parts.  Joining
an existing group is made harder as the group grows: the threshold
shrinks by 2 ** (1 - group size).  Levels where nothing merged retry
with epsilon halved, so the tree always reaches a single root.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .core import PartitionTree, tree_from_partitions
from .embedding import affinity_kernel, diffusion_embedding


@dataclass(frozen=True)
class FlexibleTreeConfig:
    epsilon: float = 1.0
    n_components: int = 10
    diffusion_time: float = 1.0
    sigma: float | str = "median"
    max_levels: int = 64

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")


def level_distances(groups, coordinates) -> np.ndarray:
    """Euclidean distances between group centroids in an embedding.

    `groups` is a sequence of member-index collections into the rows of
    `coordinates`; each group is located at the mean of its members.
    """
    coords = np.asarray(coordinates, dtype=np.float64)
    groups = [np.asarray(sorted(g), dtype=np.intp) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    cent = np.stack([coords[g].mean(axis=0) for g in groups])
    d = cdist(cent, cent)
    np.fill_diagonal(d, 0.0)
    return d


def merge_level(distances: np.ndarray, epsilon: float) -> list[list[int]]:
    """One merge pass over units with the given pairwise distances.

    Units are processed in ascending order of their nearest-neighbor
    distance (ties by index), which makes the outcome independent of
    how the units were labeled when no distances tie exactly.  A unit
    whose nearest neighbor is closer than the threshold pairs with it
    if that neighbor is free, or joins the neighbor's group if the
    distance also clears the group-size-shrunken threshold.  Nearest
    ties prefer free units, then the earliest-formed group.
    """
    d = np.asarray(distances, dtype=np.float64)
    m = d.shape[0]
    if m == 1:
        return [[0]]
    off = d[~np.eye(m, dtype=bool)]
    p = float(np.median(off))
    if p == 0.0:
        positive = off[off > 0]
        if positive.size == 0:
            return [list(range(m))]
        p = float(positive.min())
    threshold = p / epsilon

    masked = np.where(np.eye(m, dtype=bool), np.inf, d)
    nearest = masked.min(axis=1)
    order = sorted(range(m), key=lambda i: (nearest[i], i))

    group_of = list(range(m))  # ids < m mean "still free"
    members: dict[int, list[int]] = {}
    next_gid = m
    for i in order:
        if group_of[i] >= m:
            continue  # claimed by an earlier unit
        if nearest[i] >= threshold:
            continue
        tied = [j for j in range(m) if j != i and d[i, j] == nearest[i]]
        j = min(tied, key=lambda j: group_of[j])
        if group_of[j] < m:
            gid = next_gid
            next_gid += 1
            group_of[i] = group_of[j] = gid
            members[gid] = [i, j]
        else:
            gid = group_of[j]
            if nearest[i] < threshold * 2.0 ** (1 - len(members[gid])):
                group_of[i] = gid
                members[gid].append(i)

    groups = [sorted(g) for g in members.values()]
    groups += [[i] for i in range(m) if group_of[i] < m]
    return sorted(groups, key=lambda g: g[0])


def _embed_units(distances: np.ndarray, config: FlexibleTreeConfig) -> np.ndarray:
    m = distances.shape[0]
    kernel = affinity_kernel(distances, config.sigma)
    emb = diffusion_embedding(
        kernel, n_components=min(config.n_components, m - 1), t=config.diffusion_time
    )
    return emb.coordinates


def build_flexible_tree(distances, config: FlexibleTreeConfig | None = None) -> PartitionTree:
    """Grow a partition tree over the indices of a distance matrix.

    Relaxation: a level where no units merged is retried with epsilon
    halved (for that level only).  If the level budget runs out before
    the root forms, the remaining units are merged at once, with a
    warning.
    """
    if config is None:
        config = FlexibleTreeConfig()
    d = np.asarray(distances, dtype=np.float64)
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least two elements to build a tree")

    coords = _embed_units(d, config)
    unit_members: list[list[int]] = [[i] for i in range(n)]
    partitions: list[list[tuple[int, ...]]] = [[(i,) for i in range(n)]]

    level = 0
    while len(unit_members) > 1:
        level += 1
        m = len(unit_members)
        if level >= config.max_levels:
            warnings.warn(
                f"level budget {config.max_levels} exhausted with {m} units; "
                "merging the remainder into the root",
                RuntimeWarning,
            )
            partitions.append([tuple(range(n))])
            break

        unit_d = cdist(coords, coords)
        np.fill_diagonal(unit_d, 0.0)
        eps = config.epsilon
        groups = merge_level(unit_d, eps)
        attempts = 0
        while len(groups) == m and attempts < 64:
            eps /= 2.0
            groups = merge_level(unit_d, eps)
            attempts += 1
        if len(groups) == m:
            groups = [list(range(m))]

        sizes = np.array([len(unit_members[u]) for u in range(m)], dtype=np.float64)
        new_members = [sorted(x for u in g for x in unit_members[u]) for g in groups]
        partitions.append([tuple(mm) for mm in new_members])

        if len(groups) == 1:
            break

        cent = np.stack(
            [
                (sizes[g, None] * coords[g]).sum(axis=0) / sizes[g].sum()
                for g in (np.asarray(g, dtype=np.intp) for g in groups)
            ]
        )
        cent_d = cdist(cent, cent)
        np.fill_diagonal(cent_d, 0.0)
        if np.all(cent_d == 0):
            coords = cent  # indistinguishable units; next pass merges them all
        else:
            coords = _embed_units(cent_d, config)
        unit_members = new_members

    return tree_from_partitions(n, partitions)
