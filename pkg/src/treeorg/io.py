"""File formats: tree JSON, delimited matrices, label/survival tables.

All writers are deterministic: fixed key order, fixed float formatting,
newline-terminated text.  Readers raise ValueError with the offending
line number on malformed input.
"""

from __future__ import annotations

import json

import numpy as np

from .core import DataMatrix, Folder, PartitionTree, ensure_valid

FLOAT_FMT = "%.17g"


def tree_to_dict(tree: PartitionTree) -> dict:
    return {
        "axis_size": tree.axis_size,
        "levels": [list(lv) for lv in tree.levels],
        "folders": {
            str(f.id): {
                "level": f.level,
                "members": list(f.members),
                "parent": f.parent,
            }
            for f in sorted(tree.folders.values(), key=lambda f: f.id)
        },
    }


def tree_from_dict(doc: dict) -> PartitionTree:
    try:
        folders = {
            int(k): Folder(
                id=int(k),
                level=int(v["level"]),
                members=tuple(int(x) for x in v["members"]),
                parent=None if v["parent"] is None else int(v["parent"]),
            )
            for k, v in doc["folders"].items()
        }
        tree = PartitionTree(
            axis_size=int(doc["axis_size"]),
            levels=tuple(tuple(int(i) for i in lv) for lv in doc["levels"]),
            folders=folders,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed tree document: {exc}") from exc
    return ensure_valid(tree)


def save_tree(tree: PartitionTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_dict(tree), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_tree(path) -> PartitionTree:
    with open(path, encoding="utf-8") as fh:
        return tree_from_dict(json.load(fh))


def _sniff_delimiter(line: str) -> str:
    return "\t" if "\t" in line else ","


def read_matrix(path) -> DataMatrix:
    """Read a delimited matrix: first row observation ids, first column feature ids."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip() != ""]
    if len(lines) < 2:
        raise ValueError("matrix file needs a header row and at least one data row")
    delim = _sniff_delimiter(lines[0])
    header = lines[0].split(delim)
    obs_ids = [c.strip() for c in header[1:]]
    if not obs_ids:
        raise ValueError("line 1: header has no observation columns")
    feature_ids, rows = [], []
    for k, ln in enumerate(lines[1:], start=2):
        cells = ln.split(delim)
        if len(cells) != len(obs_ids) + 1:
            raise ValueError(f"line {k}: expected {len(obs_ids) + 1} cells, got {len(cells)}")
        feature_ids.append(cells[0].strip())
        try:
            rows.append([float(c) for c in cells[1:]])
        except ValueError as exc:
            raise ValueError(f"line {k}: non-numeric cell ({exc})") from exc
    return DataMatrix(np.asarray(rows), tuple(feature_ids), tuple(obs_ids))


def write_matrix(data: DataMatrix, path, delimiter=",") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(["id", *data.observation_ids]) + "\n")
        for fid, row in zip(data.feature_ids, data.values):
            cells = [FLOAT_FMT % v for v in row]
            fh.write(delimiter.join([fid, *cells]) + "\n")


def write_array(values, path, delimiter=",") -> None:
    """Bare numeric table without headers, for diagnostics."""
    arr = np.atleast_2d(np.asarray(values, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(delimiter.join(FLOAT_FMT % v for v in row) + "\n")


def write_distances(distances, ids, path) -> None:
    """Square distance matrix with id headers on both axes."""
    d = np.asarray(distances, dtype=np.float64)
    ids = list(ids)
    if d.shape != (len(ids), len(ids)):
        raise ValueError("distance matrix shape does not match id count")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["id", *ids]) + "\n")
        for name, row in zip(ids, d):
            fh.write(",".join([name, *(FLOAT_FMT % v for v in row)]) + "\n")


def read_distances(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    delim = _sniff_delimiter(lines[0])
    ids = [c.strip() for c in lines[0].split(delim)[1:]]
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        cells = ln.split(delim)
        if len(cells) != len(ids) + 1:
            raise ValueError(f"line {k}: expected {len(ids) + 1} cells, got {len(cells)}")
        rows.append([float(c) for c in cells[1:]])
    d = np.asarray(rows)
    if d.shape != (len(ids), len(ids)):
        raise ValueError("distance table is not square")
    return d, ids


def write_transform_triplets(transform, path, sidecar_path=None) -> None:
    """Sparse transform as (row, col, value) CSV plus a folder-id sidecar.

    Works for single-tree transforms (sidecar lists folder ids) and
    multi-tree transforms (sidecar lists [tree_index, folder_id] pairs).
    """
    mat = transform.matrix.tocoo()
    order = np.lexsort((mat.col, mat.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,value\n")
        for k in order:
            fh.write(f"{mat.row[k]},{mat.col[k]}," + FLOAT_FMT % mat.data[k] + "\n")
    if sidecar_path is not None:
        if hasattr(transform, "folder_provenance"):
            rows = [list(p) for p in transform.folder_provenance]
            doc = {"kind": "multi_averaging", "rows": rows}
        else:
            doc = {"kind": transform.kind, "rows": list(transform.folder_ids)}
        doc["shape"] = list(transform.matrix.shape)
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")


def read_labels(path) -> dict[str, str]:
    """Two-column id,label table (header optional)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    delim = _sniff_delimiter(lines[0])
    out: dict[str, str] = {}
    start = 1 if lines[0].split(delim)[0].strip().lower() in ("id", "sample") else 0
    for k, ln in enumerate(lines[start:], start=start + 1):
        cells = [c.strip() for c in ln.split(delim)]
        if len(cells) < 2:
            raise ValueError(f"line {k}: expected id and label")
        if cells[0] in out:
            raise ValueError(f"line {k}: duplicate id {cells[0]!r}")
        out[cells[0]] = cells[1]
    return out


def write_labels(ids, labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,label\n")
        for i, lab in zip(ids, labels):
            fh.write(f"{i},{lab}\n")


def read_survival(path):
    """Survival table with columns id, time, event, group.

    Event must be 0/1 (or true/false); returns (ids, times, events, groups).
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError("empty survival file")
    delim = _sniff_delimiter(lines[0])
    header = [c.strip().lower() for c in lines[0].split(delim)]
    expected = ["id", "time", "event", "group"]
    if header != expected:
        raise ValueError(f"line 1: expected header {','.join(expected)}")
    ids, times, events, groups = [], [], [], []
    truth = {"0": 0, "1": 1, "false": 0, "true": 1}
    for k, ln in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in ln.split(delim)]
        if len(cells) != 4:
            raise ValueError(f"line {k}: expected 4 cells, got {len(cells)}")
        try:
            t = float(cells[1])
        except ValueError as exc:
            raise ValueError(f"line {k}: bad time value") from exc
        if not np.isfinite(t) or t < 0:
            raise ValueError(f"line {k}: time must be finite and non-negative")
        ev = truth.get(cells[2].lower())
        if ev is None:
            raise ValueError(f"line {k}: event must be 0/1")
        ids.append(cells[0])
        times.append(t)
        events.append(ev)
        groups.append(cells[3])
    return ids, np.asarray(times), np.asarray(events, dtype=bool), groups


def write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
