"""Data matrices and partition trees.

A partition tree over n indices is a sequence of nested partitions
P_0, ..., P_L where P_0 holds the n singletons and P_L is the single
root folder.  Every folder at level l < L is contained in exactly one
folder at level l + 1, so each index appears in exactly L + 1 folders.
Folders that merely copy a folder from the level below (pass-throughs)
are allowed; they keep the tree at uniform depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class InvalidTreeError(ValueError):
    """Raised when a partition tree violates the nesting laws."""


@dataclass(frozen=True)
class Folder:
    """One node of a partition tree: a set of indices at a given level."""

    id: int
    level: int
    members: tuple[int, ...]
    parent: int | None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class PartitionTree:
    """Immutable partition tree with canonical folder ids.

    Folder ids are contiguous 0..N-1, assigned level-major from the
    leaves up, and within a level by ascending smallest member.  With
    that convention leaf i always has folder id i and the root has
    id N - 1.
    """

    axis_size: int
    levels: tuple[tuple[int, ...], ...]
    folders: dict[int, Folder]

    @property
    def n_levels(self) -> int:
        """L, the index of the root level."""
        return len(self.levels) - 1

    @property
    def n_folders(self) -> int:
        return len(self.folders)

    @property
    def root(self) -> Folder:
        return self.folders[self.levels[-1][0]]

    def folders_at_level(self, level: int) -> list[Folder]:
        return [self.folders[i] for i in self.levels[level]]

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        """Map folder id -> ids of its children, ascending smallest member."""
        kids: dict[int, list[int]] = {i: [] for i in self.folders}
        for f in self.folders.values():
            if f.parent is not None:
                kids[f.parent].append(f.id)
        return {
            i: tuple(sorted(ids, key=lambda j: self.folders[j].members[0]))
            for i, ids in kids.items()
        }

    def descendants(self, folder_id: int) -> list[int]:
        """Ids of the folder and everything below it, by child links."""
        out = []
        stack = [folder_id]
        while stack:
            i = stack.pop()
            out.append(i)
            stack.extend(self.children[i])
        return out


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def validate_tree(tree: PartitionTree) -> ValidationReport:
    """Check every structural law of a partition tree.

    Returns a report listing each violation; an empty list means the
    tree is sound.  Use ensure_valid() to raise instead.
    """
    bad: list[str] = []
    n = tree.axis_size
    if n < 1:
        return ValidationReport(False, ("axis_size must be >= 1",))
    if len(tree.levels) < 1:
        return ValidationReport(False, ("tree has no levels",))

    all_ids = [i for lv in tree.levels for i in lv]
    if sorted(all_ids) != list(range(len(tree.folders))):
        bad.append("folder ids are not contiguous 0..N-1 across levels")
    if set(all_ids) != set(tree.folders):
        bad.append("levels and folder map disagree")
        return ValidationReport(False, tuple(bad))

    universe = frozenset(range(n))
    for l, lv in enumerate(tree.levels):
        seen: set[int] = set()
        for i in lv:
            f = tree.folders[i]
            if f.level != l:
                bad.append(f"folder {i} listed at level {l} but records level {f.level}")
            if not f.members:
                bad.append(f"folder {i} is empty")
                continue
            if list(f.members) != sorted(set(f.members)):
                bad.append(f"folder {i} members not sorted unique")
            if seen & set(f.members):
                bad.append(f"level {l} folders overlap at folder {i}")
            seen.update(f.members)
        if seen != universe:
            bad.append(f"level {l} does not cover all {n} indices")

    if len(tree.levels[0]) != n:
        bad.append("level 0 must hold exactly the n singletons")
    else:
        for i in tree.levels[0]:
            if tree.folders[i].size != 1:
                bad.append(f"level 0 folder {i} is not a singleton")
    if len(tree.levels[-1]) != 1:
        bad.append("top level must hold a single root folder")

    top = tree.n_levels
    for f in tree.folders.values():
        if f.level == top:
            if f.parent is not None:
                bad.append("root folder has a parent")
        else:
            if f.parent is None:
                bad.append(f"folder {f.id} below the root has no parent")
                continue
            p = tree.folders.get(f.parent)
            if p is None or p.level != f.level + 1:
                bad.append(f"folder {f.id} parent is not one level up")
            elif not set(f.members) <= set(p.members):
                bad.append(f"folder {f.id} is not nested in its parent")

    return ValidationReport(not bad, tuple(bad))


def ensure_valid(tree: PartitionTree) -> PartitionTree:
    report = validate_tree(tree)
    if not report.ok:
        raise InvalidTreeError("; ".join(report.violations))
    return tree


def tree_from_partitions(axis_size, partitions) -> PartitionTree:
    """Build a canonical tree from one member list per level.

    `partitions` is a sequence over levels 0..L, each an iterable of
    member collections.  Folder ids are assigned canonically and parent
    links are inferred from nesting.  Raises InvalidTreeError if the
    levels are not nested partitions of range(axis_size).
    """
    levels_members: list[list[tuple[int, ...]]] = []
    for parts in partitions:
        members = sorted((tuple(sorted(p)) for p in parts), key=lambda m: m[0] if m else -1)
        levels_members.append(members)

    folders: dict[int, Folder] = {}
    levels: list[tuple[int, ...]] = []
    next_id = 0
    for l, members in enumerate(levels_members):
        ids = []
        for m in members:
            folders[next_id] = Folder(id=next_id, level=l, members=m, parent=None)
            ids.append(next_id)
            next_id += 1
        levels.append(tuple(ids))

    # Link each folder to the folder one level up that holds its first member.
    for l in range(len(levels) - 1):
        owner = {}
        for j in levels[l + 1]:
            for x in folders[j].members:
                owner[x] = j
        for i in levels[l]:
            f = folders[i]
            parent = owner.get(f.members[0])
            folders[i] = Folder(id=i, level=l, members=f.members, parent=parent)

    tree = PartitionTree(axis_size=int(axis_size), levels=tuple(levels), folders=folders)
    return ensure_valid(tree)


def trivial_tree(n: int) -> PartitionTree:
    """Two-level tree: n singletons under a single root."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return tree_from_partitions(1, [[(0,)]])
    return tree_from_partitions(n, [[(i,) for i in range(n)], [tuple(range(n))]])


def leaf_order(tree: PartitionTree) -> np.ndarray:
    """Depth-first leaf permutation of a valid tree.

    Children are visited in ascending smallest-member order, so the
    identity tree yields the identity permutation; any reordering comes
    from the tree's grouping alone.
    """
    ensure_valid(tree)
    order: list[int] = []
    stack = [tree.root.id]
    while stack:
        i = stack.pop()
        f = tree.folders[i]
        if f.level == 0:
            order.append(f.members[0])
        else:
            stack.extend(reversed(tree.children[i]))
    out = np.asarray(order, dtype=np.int64)
    if len(out) != tree.axis_size:
        raise InvalidTreeError("leaf traversal did not reach every index")
    return out


@dataclass(frozen=True)
class TreeStats:
    n_levels: int
    n_folders: int
    folders_per_level: tuple[int, ...]
    folder_size_histogram: dict[int, int]


def tree_stats(tree: PartitionTree) -> TreeStats:
    hist: dict[int, int] = {}
    for f in tree.folders.values():
        hist[f.size] = hist.get(f.size, 0) + 1
    return TreeStats(
        n_levels=tree.n_levels,
        n_folders=tree.n_folders,
        folders_per_level=tuple(len(lv) for lv in tree.levels),
        folder_size_histogram=dict(sorted(hist.items())),
    )


@dataclass(frozen=True)
class DataMatrix:
    """A real matrix with named axes: features on rows, observations on columns."""

    values: np.ndarray
    feature_ids: tuple[str, ...] = ()
    observation_ids: tuple[str, ...] = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("data matrix must be 2-dimensional")
        if vals.shape[0] < 2 or vals.shape[1] < 2:
            raise ValueError("data matrix must be at least 2 x 2")
        if not np.all(np.isfinite(vals)):
            raise ValueError("data matrix contains non-finite entries")
        fids = tuple(self.feature_ids) or tuple(f"f{i}" for i in range(vals.shape[0]))
        oids = tuple(self.observation_ids) or tuple(f"o{j}" for j in range(vals.shape[1]))
        if len(fids) != vals.shape[0]:
            raise ValueError("feature id count does not match row count")
        if len(oids) != vals.shape[1]:
            raise ValueError("observation id count does not match column count")
        if len(set(fids)) != len(fids):
            raise ValueError("duplicate feature ids")
        if len(set(oids)) != len(oids):
            raise ValueError("duplicate observation ids")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "feature_ids", fids)
        object.__setattr__(self, "observation_ids", oids)

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_observations(self) -> int:
        return self.values.shape[1]


def as_values(data) -> np.ndarray:
    """Accept a DataMatrix or a plain 2-d array and return float64 values."""
    if isinstance(data, DataMatrix):
        return data.values
    vals = np.asarray(data, dtype=np.float64)
    if vals.ndim != 2:
        raise ValueError("expected a 2-dimensional array")
    return vals
