"""Tree transforms, tree metrics, and bi-organization of data matrices.

Submodules are imported lazily so entry points can configure the
process (BLAS thread caps) before any numerical library loads.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "DataMatrix": "core",
    "Folder": "core",
    "PartitionTree": "core",
    "InvalidTreeError": "core",
    "validate_tree": "core",
    "tree_from_partitions": "core",
    "trivial_tree": "core",
    "leaf_order": "core",
    "tree_stats": "core",
    "build_structure": "transforms",
    "build_averaging": "transforms",
    "build_difference": "transforms",
    "build_multi_tree": "transforms",
    "apply_to_rows": "transforms",
    "apply_to_cols": "transforms",
    "joint_average": "transforms",
    "joint_difference": "transforms",
    "reconstruct": "transforms",
    "reconstruct_joint": "transforms",
    "centroids": "transforms",
    "FolderWeights": "metrics",
    "folder_weights": "metrics",
    "tree_distance": "metrics",
    "pairwise_distances": "metrics",
    "joint_distance": "metrics",
    "multi_tree_distance": "metrics",
    "initial_metric": "embedding",
    "affinity_kernel": "embedding",
    "diffusion_embedding": "embedding",
    "FlexibleTreeConfig": "flexible",
    "build_flexible_tree": "flexible",
    "level_distances": "flexible",
    "haar_like_basis": "biorg",
    "coherence": "biorg",
    "WeightConfig": "biorg",
    "BiOrgConfig": "biorg",
    "OrganizationResult": "biorg",
    "bi_organize": "biorg",
    "difference_energy": "refine",
    "merge_subtree": "refine",
    "local_refine": "refine",
    "RefinementResult": "refine",
    "clusters_at_level": "evaluation",
    "rand_index": "evaluation",
    "adjusted_rand_index": "evaluation",
    "variation_of_information": "evaluation",
    "SurvivalCohort": "evaluation",
    "kaplan_meier": "evaluation",
    "log_rank": "evaluation",
    "insert_samples": "evaluation",
    "planted_blocks": "synthetic",
    "planted_hierarchical": "synthetic",
    "random_partition_tree": "synthetic",
    "render_heatmap": "heatmap",
    "save_heatmap": "heatmap",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module 'treeorg' has no attribute {name!r}")
    import importlib

    return getattr(importlib.import_module(f".{module}", __name__), name)


def __dir__():
    return __all__
