"""Command-line interface.

The heavy numerical imports happen inside the handlers, after the
thread environment is pinned: artifacts must be byte-identical for any
--threads value, so the linear-algebra backend is held at one thread
and --threads only fans out the library's own tiled distance pass.
"""

from __future__ import annotations

import argparse
import os
import sys


def _pin_blas_threads() -> None:
    for var in (
        "OPENBLAS_NUM_THREADS",
        "OMP_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
    ):
        os.environ.setdefault(var, "1")


def _read_config_file(path) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment; keys match long flags."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for k, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {k}: expected key = value")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _sigma(text):
    return "median" if text == "median" else float(text)


def _add_tree_opts(p):
    p.add_argument("--epsilon", type=float, default=1.0, help="merge threshold divisor")
    p.add_argument("--components", type=int, default=10, help="embedding dimensions")
    p.add_argument("--time", type=float, default=1.0, help="diffusion time")
    p.add_argument("--sigma", type=_sigma, default="median", help="kernel bandwidth or 'median'")
    p.add_argument("--max-levels", type=int, default=64)


def _add_weight_opts(p):
    p.add_argument(
        "--weights",
        choices=("data_driven", "size_beta", "level_alpha_beta"),
        default="data_driven",
    )
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)


def _add_biorg_opts(p):
    p.add_argument("--iterations", type=int, default=2)
    p.add_argument(
        "--stopping", choices=("fixed_iterations", "coherence_decrease"), default="fixed_iterations"
    )
    p.add_argument("--metric", choices=("correlation", "euclidean"), default="correlation")
    _add_weight_opts(p)
    _add_tree_opts(p)


def _add_globals(p, top: bool) -> None:
    # Subcommand copies suppress their defaults so they never clobber a
    # value given before the subcommand name.
    kw = {} if top else {"default": argparse.SUPPRESS}
    p.add_argument("--config", help="flat key = value file supplying flag defaults", **kw)
    p.add_argument(
        "--threads",
        type=int,
        default=None if top else argparse.SUPPRESS,
        help="worker threads (artifact values never depend on this)",
    )
    p.add_argument(
        "--seed",
        type=int,
        default=0 if top else argparse.SUPPRESS,
        help="seed for the random subcommands",
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="treeorg",
        description="Organize data matrices with partition trees and tree metrics.",
    )
    _add_globals(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    original_add = sub.add_parser

    def add_parser(name, **kwargs):
        p = original_add(name, **kwargs)
        _add_globals(p, top=False)
        registry[name] = p
        return p

    sub.add_parser = add_parser

    p = sub.add_parser("build-tree", help="grow a flexible tree from a matrix axis")
    p.add_argument("--input", required=True)
    p.add_argument("--axis", choices=("rows", "cols"), default="rows")
    p.add_argument("--metric", choices=("correlation", "euclidean"), default="correlation")
    _add_tree_opts(p)
    p.add_argument("--out", required=True, help="tree JSON path")

    p = sub.add_parser("biorg", help="iterative bi-organization of a matrix")
    p.add_argument("--input", required=True)
    _add_biorg_opts(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--heatmap", help="also draw the reordered matrix to this SVG")

    p = sub.add_parser("refine", help="refine organized trees inside their folders")
    p.add_argument("--input", required=True)
    p.add_argument("--tree-x", required=True, help="feature tree JSON")
    p.add_argument("--tree-y", required=True, help="observation tree JSON")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--axis", choices=("y", "x", "both"), default="y")
    _add_biorg_opts(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("metric", help="pairwise tree distances along one axis")
    p.add_argument("--input", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--axis", choices=("rows", "cols"), default="cols")
    _add_weight_opts(p)
    p.add_argument("--out", required=True, help="distance CSV path")

    p = sub.add_parser("transform", help="export a tree transform or apply it to a matrix")
    p.add_argument("--tree", required=True)
    p.add_argument("--kind", choices=("structure", "averaging", "difference"), required=True)
    p.add_argument("--out", required=True, help="triplet CSV path")
    p.add_argument("--sidecar", help="folder-id sidecar JSON path")
    p.add_argument("--input", help="matrix to transform")
    p.add_argument("--apply-axis", choices=("rows", "cols"), default="rows")
    p.add_argument("--matrix-out", help="where to write the transformed matrix")

    p = sub.add_parser("coherence", help="Haar-like coherence of a matrix under two trees")
    p.add_argument("--input", required=True)
    p.add_argument("--tree-x", required=True)
    p.add_argument("--tree-y", required=True)
    p.add_argument("--out", help="optional JSON output path")

    p = sub.add_parser("evaluate", help="cluster agreement or survival separation")
    p.add_argument("--labels", help="id,label CSV to evaluate")
    p.add_argument("--labels-ref", help="reference id,label CSV")
    p.add_argument("--survival", help="id,time,event,group CSV")
    p.add_argument("--out", help="JSON output path (default stdout)")

    p = sub.add_parser("insert", help="place new samples into a trained tree pair")
    p.add_argument("--train", required=True)
    p.add_argument("--tree-x", required=True)
    p.add_argument("--tree-y", required=True)
    p.add_argument("--new", required=True, help="matrix of new observation columns")
    _add_weight_opts(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("synth", help="generate a planted matrix with labels")
    p.add_argument("--size", default="200x200", help="ROWSxCOLS")
    p.add_argument("--blocks", default="4x4", help="row and column cluster counts, KxK")
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--hierarchical", action="store_true", help="plant nested sub-structure")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("heatmap", help="draw a matrix (optionally reordered) as SVG")
    p.add_argument("--input", required=True)
    p.add_argument("--order-rows", help="CSV with one leaf index per line")
    p.add_argument("--order-cols", help="CSV with one leaf index per line")
    p.add_argument("--annotations", help="id,label CSV aligned to the matrix columns")
    p.add_argument("--cell", type=int, default=6)
    p.add_argument("--out", required=True)

    return parser, registry


def _apply_config_defaults(parser, registry, argv):
    """Config file values become defaults, so explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    values = _read_config_file(known.config)
    valid = {a.dest for a in parser._actions}
    for p in registry.values():
        valid.update(a.dest for a in p._actions)
    unknown = set(values) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    parser.set_defaults(**values)
    for p in registry.values():
        p.set_defaults(**{k: v for k, v in values.items() if k in {a.dest for a in p._actions}})


def _coerce(args) -> None:
    """Config-file values arrive as strings; coerce the typed ones."""
    casts = {
        "threads": int,
        "seed": int,
        "iterations": int,
        "level": int,
        "components": int,
        "max_levels": int,
        "cell": int,
        "epsilon": float,
        "time": float,
        "beta": float,
        "alpha": float,
        "noise": float,
        "sigma": _sigma,
    }
    for key, cast in casts.items():
        if hasattr(args, key) and isinstance(getattr(args, key), str) and key != "sigma":
            setattr(args, key, cast(getattr(args, key)))
    if hasattr(args, "sigma") and isinstance(args.sigma, str) and args.sigma != "median":
        args.sigma = float(args.sigma)


def main(argv=None) -> int:
    _pin_blas_threads()
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, registry = build_parser()
    try:
        _apply_config_defaults(parser, registry, argv)
        args = parser.parse_args(argv)
        _coerce(args)
        if getattr(args, "threads", None) is None:
            args.threads = int(os.environ.get("TREEORG_THREADS", "1"))
        _HANDLERS[args.command](args)
    except SystemExit:
        raise
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _tree_config(args):
    from .flexible import FlexibleTreeConfig

    return FlexibleTreeConfig(
        epsilon=args.epsilon,
        n_components=args.components,
        diffusion_time=args.time,
        sigma=args.sigma,
        max_levels=args.max_levels,
    )


def _biorg_config(args):
    from .biorg import BiOrgConfig, WeightConfig

    wc = WeightConfig(scheme=args.weights, beta=args.beta, alpha=args.alpha)
    tc = _tree_config(args)
    return BiOrgConfig(
        max_iterations=args.iterations,
        stopping=args.stopping,
        initial_metric_kind=args.metric,
        weights_x=wc,
        weights_y=wc,
        tree_x=tc,
        tree_y=tc,
        threads=args.threads,
    )


def _weights_for(args, tree, data_on_axis):
    from .metrics import folder_weights

    return folder_weights(
        tree, args.weights, beta=args.beta, alpha=args.alpha, data=data_on_axis
    )


def _cmd_build_tree(args) -> None:
    from . import io
    from .embedding import initial_metric
    from .flexible import build_flexible_tree

    data = io.read_matrix(args.input)
    d = initial_metric(data, axis=args.axis, kind=args.metric)
    tree = build_flexible_tree(d, _tree_config(args))
    io.save_tree(tree, args.out)


def _cmd_biorg(args) -> None:
    import numpy as np

    from . import io
    from .biorg import bi_organize
    from .heatmap import save_heatmap

    data = io.read_matrix(args.input)
    result = bi_organize(data, _biorg_config(args))
    os.makedirs(args.out_dir, exist_ok=True)
    io.save_tree(result.tree_x, os.path.join(args.out_dir, "tree_x.json"))
    io.save_tree(result.tree_y, os.path.join(args.out_dir, "tree_y.json"))
    io.write_array(np.asarray(result.coherence_trace), os.path.join(args.out_dir, "coherence.csv"))
    io.write_array(result.row_order[None, :], os.path.join(args.out_dir, "order_rows.csv"))
    io.write_array(result.col_order[None, :], os.path.join(args.out_dir, "order_cols.csv"))
    if args.heatmap:
        save_heatmap(data, args.heatmap, row_order=result.row_order, col_order=result.col_order)


def _cmd_refine(args) -> None:
    from . import io
    from .biorg import coherence
    from .refine import local_refine

    data = io.read_matrix(args.input)
    tree_x = io.load_tree(args.tree_x)
    tree_y = io.load_tree(args.tree_y)
    config = _biorg_config(args)
    os.makedirs(args.out_dir, exist_ok=True)

    refined_x, refined_y = tree_x, tree_y
    if args.axis in ("y", "both"):
        res_y = local_refine(data, tree_y, args.level, config)
        refined_y = res_y.tree
        io.save_tree(refined_y, os.path.join(args.out_dir, "tree_y_refined.json"))
        for k, ft in enumerate(res_y.feature_trees):
            io.save_tree(ft, os.path.join(args.out_dir, f"feature_tree_{k}.json"))
    if args.axis in ("x", "both"):
        res_x = local_refine(data.values.T, tree_x, args.level, config)
        refined_x = res_x.tree
        io.save_tree(refined_x, os.path.join(args.out_dir, "tree_x_refined.json"))
        for k, ot in enumerate(res_x.feature_trees):
            io.save_tree(ot, os.path.join(args.out_dir, f"observation_tree_{k}.json"))
    doc = {
        "coherence_global": coherence(data, tree_x, tree_y),
        "coherence_refined": coherence(data, refined_x, refined_y),
    }
    io.write_json(doc, os.path.join(args.out_dir, "coherence.json"))


def _cmd_metric(args) -> None:
    from . import io
    from .metrics import pairwise_distances

    data = io.read_matrix(args.input)
    tree = io.load_tree(args.tree)
    on_axis = data.values if args.axis == "cols" else data.values.T
    weights = _weights_for(args, tree, on_axis)
    d = pairwise_distances(tree, weights, data, axis=args.axis, threads=args.threads)
    ids = data.observation_ids if args.axis == "cols" else data.feature_ids
    io.write_distances(d, ids, args.out)


def _cmd_transform(args) -> None:
    from . import io
    from .transforms import apply_to_cols, apply_to_rows, build_averaging, build_difference, build_structure

    tree = io.load_tree(args.tree)
    build = {
        "structure": build_structure,
        "averaging": build_averaging,
        "difference": build_difference,
    }[args.kind]
    transform = build(tree)
    io.write_transform_triplets(transform, args.out, args.sidecar)
    if args.input and args.matrix_out:
        data = io.read_matrix(args.input)
        if args.apply_axis == "rows":
            out = apply_to_rows(transform, data)
        else:
            out = apply_to_cols(data, transform)
        io.write_array(out, args.matrix_out)


def _cmd_coherence(args) -> None:
    from . import io
    from .biorg import coherence

    data = io.read_matrix(args.input)
    value = coherence(data, io.load_tree(args.tree_x), io.load_tree(args.tree_y))
    print("%.17g" % value)
    if args.out:
        io.write_json({"coherence": value}, args.out)


def _cmd_evaluate(args) -> None:
    from . import io

    doc: dict = {}
    if args.labels and args.labels_ref:
        from .evaluation import adjusted_rand_index, rand_index, variation_of_information

        got = io.read_labels(args.labels)
        ref = io.read_labels(args.labels_ref)
        if set(got) != set(ref):
            raise ValueError("label files cover different ids")
        ids = sorted(got)
        a = [got[i] for i in ids]
        b = [ref[i] for i in ids]
        doc["rand_index"] = rand_index(a, b)
        doc["adjusted_rand_index"] = adjusted_rand_index(a, b)
        doc["variation_of_information"] = variation_of_information(a, b)
    elif args.survival:
        from .evaluation import SurvivalCohort, kaplan_meier, log_rank

        _, times, events, groups = io.read_survival(args.survival)
        cohort = SurvivalCohort(times, events, tuple(groups))
        result = log_rank(cohort)
        doc["log_rank_statistic"] = result.statistic
        doc["log_rank_df"] = result.df
        doc["log_rank_p"] = result.p_value
        doc["kaplan_meier"] = {
            g: kaplan_meier(cohort, g).tolist() for g in cohort.group_labels()
        }
    else:
        raise ValueError("evaluate needs --labels with --labels-ref, or --survival")
    if args.out:
        io.write_json(doc, args.out)
    else:
        import json

        print(json.dumps(doc, indent=1, sort_keys=True))


def _cmd_insert(args) -> None:
    from . import io
    from .evaluation import insert_samples

    train = io.read_matrix(args.train)
    tree_x = io.load_tree(args.tree_x)
    tree_y = io.load_tree(args.tree_y)
    new = io.read_matrix(args.new)
    weights = _weights_for(args, tree_x, train.values)
    result = insert_samples(train, tree_x, tree_y, weights, new.values)
    os.makedirs(args.out_dir, exist_ok=True)
    io.write_labels(new.observation_ids, result.assignments.tolist(),
                    os.path.join(args.out_dir, "assignments.csv"))
    io.save_tree(result.hierarchy, os.path.join(args.out_dir, "hierarchy.json"))


def _parse_pair(text: str, what: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError as exc:
        raise ValueError(f"{what} must look like 4x4") from exc


def _cmd_synth(args) -> None:
    import numpy as np

    from . import io
    from .synthetic import planted_blocks, planted_hierarchical

    n_rows, n_cols = _parse_pair(args.size, "--size")
    k_rows, k_cols = _parse_pair(args.blocks, "--blocks")
    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    if args.hierarchical:
        data, labels = planted_hierarchical(
            n_rows, n_cols, k_rows, k_cols, noise=args.noise, rng=rng
        )
        row_labels = labels["row_coarse"]
        col_labels = labels["col_coarse"]
        io.write_labels(data.feature_ids, labels["row_fine"].tolist(),
                        os.path.join(args.out_dir, "row_labels_fine.csv"))
        io.write_labels(data.observation_ids, labels["col_fine"].tolist(),
                        os.path.join(args.out_dir, "col_labels_fine.csv"))
    else:
        data, row_labels, col_labels = planted_blocks(
            n_rows, n_cols, k_rows, k_cols, noise=args.noise, rng=rng
        )
    io.write_matrix(data, os.path.join(args.out_dir, "z.csv"))
    io.write_labels(data.feature_ids, row_labels.tolist(),
                    os.path.join(args.out_dir, "row_labels.csv"))
    io.write_labels(data.observation_ids, col_labels.tolist(),
                    os.path.join(args.out_dir, "col_labels.csv"))


def _read_order(path):
    import numpy as np

    with open(path, encoding="utf-8") as fh:
        cells = fh.read().replace(",", "\n").split()
    return np.array([int(c) for c in cells], dtype=np.int64)


def _cmd_heatmap(args) -> None:
    from . import io
    from .heatmap import save_heatmap

    data = io.read_matrix(args.input)
    row_order = _read_order(args.order_rows) if args.order_rows else None
    col_order = _read_order(args.order_cols) if args.order_cols else None
    annotations = None
    if args.annotations:
        table = io.read_labels(args.annotations)
        try:
            labels = [table[i] for i in data.observation_ids]
        except KeyError as exc:
            raise ValueError(f"annotation file misses column id {exc}") from exc
        annotations = [("label", labels)]
    save_heatmap(
        data,
        args.out,
        row_order=row_order,
        col_order=col_order,
        annotations=annotations,
        cell=args.cell,
    )


_HANDLERS = {
    "build-tree": _cmd_build_tree,
    "biorg": _cmd_biorg,
    "refine": _cmd_refine,
    "metric": _cmd_metric,
    "transform": _cmd_transform,
    "coherence": _cmd_coherence,
    "evaluate": _cmd_evaluate,
    "insert": _cmd_insert,
    "synth": _cmd_synth,
    "heatmap": _cmd_heatmap,
}


if __name__ == "__main__":
    sys.exit(main())
