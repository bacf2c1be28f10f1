import numpy as np
import pytest

from treeorg.core import tree_from_partitions


@pytest.fixture
def eight_leaf_tree():
    """8 leaves, 14 folders over 4 levels; used across the transform tests."""
    return tree_from_partitions(
        8,
        [
            [(i,) for i in range(8)],
            [(0, 1), (2, 3, 4), (5, 6, 7)],
            [(0, 1, 2, 3, 4), (5, 6, 7)],
            [tuple(range(8))],
        ],
    )


@pytest.fixture
def two_leaf_tree():
    return tree_from_partitions(2, [[(0,), (1,)], [(0, 1)]])


@pytest.fixture
def passthrough_tree():
    """Index 2 rides alone through level 1 before joining at the root."""
    return tree_from_partitions(
        3,
        [
            [(0,), (1,), (2,)],
            [(0, 1), (2,)],
            [(0, 1, 2)],
        ],
    )


def make_rng(seed=0):
    return np.random.default_rng(seed)
