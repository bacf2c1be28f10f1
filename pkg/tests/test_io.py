import json

import numpy as np
import pytest

from treeorg.core import DataMatrix, tree_from_partitions
from treeorg.io import (
    load_tree,
    read_distances,
    read_labels,
    read_matrix,
    read_survival,
    save_tree,
    tree_from_dict,
    tree_to_dict,
    write_distances,
    write_json,
    write_labels,
    write_matrix,
    write_transform_triplets,
)
from treeorg.transforms import build_averaging, build_difference, build_multi_tree


class TestTreeJson:
    def test_round_trip(self, eight_leaf_tree, tmp_path):
        path = tmp_path / "tree.json"
        save_tree(eight_leaf_tree, path)
        back = load_tree(path)
        assert back.axis_size == eight_leaf_tree.axis_size
        assert back.levels == eight_leaf_tree.levels
        assert all(
            back.folders[i].members == eight_leaf_tree.folders[i].members
            and back.folders[i].parent == eight_leaf_tree.folders[i].parent
            for i in eight_leaf_tree.folders
        )

    def test_dict_round_trip_survives_json(self, passthrough_tree):
        doc = json.loads(json.dumps(tree_to_dict(passthrough_tree)))
        back = tree_from_dict(doc)
        assert back.levels == passthrough_tree.levels

    def test_malformed_document_rejected(self):
        with pytest.raises(ValueError, match="malformed"):
            tree_from_dict({"axis_size": 2, "levels": [[0, 1]]})

    def test_invalid_tree_rejected_on_load(self, tmp_path):
        doc = tree_to_dict(tree_from_partitions(2, [[(0,), (1,)], [(0, 1)]]))
        doc["folders"]["2"]["members"] = [0]  # root no longer covers leaf 1
        path = tmp_path / "bad.json"
        with open(path, "w") as fh:
            json.dump(doc, fh)
        with pytest.raises(ValueError):
            load_tree(path)

    def test_serialization_is_deterministic(self, eight_leaf_tree, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_tree(eight_leaf_tree, a)
        save_tree(eight_leaf_tree, b)
        assert a.read_bytes() == b.read_bytes()


class TestMatrixFiles:
    def test_round_trip_preserves_everything(self, tmp_path):
        data = DataMatrix(
            np.array([[1.5, -2.0, 3.25], [0.1, 0.2, 0.3]]),
            ("geneA", "geneB"),
            ("s1", "s2", "s3"),
        )
        path = tmp_path / "m.csv"
        write_matrix(data, path)
        back = read_matrix(path)
        assert back.feature_ids == data.feature_ids
        assert back.observation_ids == data.observation_ids
        assert np.array_equal(back.values, data.values)

    def test_exact_floats_survive(self, tmp_path):
        vals = np.array([[1 / 3, np.pi], [1e-17, 12345.678901234567]])
        data = DataMatrix(vals)
        path = tmp_path / "m.csv"
        write_matrix(data, path)
        assert np.array_equal(read_matrix(path).values, vals)

    def test_tab_delimited_input(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("id\ta\tb\nf1\t1.0\t2.0\nf2\t3.0\t4.0\n")
        data = read_matrix(path)
        assert data.observation_ids == ("a", "b")
        assert data.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_ragged_row_reports_line_number(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("id,a,b\nf1,1.0,2.0\nf2,3.0\n")
        with pytest.raises(ValueError, match="line 3"):
            read_matrix(path)

    def test_non_numeric_cell_reports_line_number(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("id,a,b\nf1,1.0,oops\nf2,3.0,4.0\n")
        with pytest.raises(ValueError, match="line 2"):
            read_matrix(path)

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("id,a,b\n")
        with pytest.raises(ValueError, match="header row"):
            read_matrix(path)

    def test_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("id,a,b\n\nf1,1.0,2.0\n\nf2,3.0,4.0\n")
        assert read_matrix(path).values.shape == (2, 2)


class TestDistanceFiles:
    def test_round_trip(self, tmp_path):
        d = np.array([[0.0, 1.5], [1.5, 0.0]])
        path = tmp_path / "d.csv"
        write_distances(d, ["x", "y"], path)
        back, ids = read_distances(path)
        assert ids == ["x", "y"]
        assert np.array_equal(back, d)

    def test_shape_mismatch_rejected_on_write(self, tmp_path):
        with pytest.raises(ValueError, match="shape"):
            write_distances(np.zeros((2, 2)), ["a"], tmp_path / "d.csv")

    def test_non_square_rejected_on_read(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("id,a,b\na,0.0,1.0\n")
        with pytest.raises(ValueError, match="square"):
            read_distances(path)


class TestTransformTriplets:
    def test_averaging_triplets_reconstruct_the_matrix(self, eight_leaf_tree, tmp_path):
        avg = build_averaging(eight_leaf_tree)
        path = tmp_path / "avg.csv"
        side = tmp_path / "avg.json"
        write_transform_triplets(avg, path, side)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "row,col,value"
        dense = np.zeros(avg.matrix.shape)
        for ln in lines[1:]:
            r, c, v = ln.split(",")
            dense[int(r), int(c)] = float(v)
        assert np.array_equal(dense, avg.dense())
        doc = json.loads(side.read_text())
        assert doc["kind"] == "averaging"
        assert doc["rows"] == list(avg.folder_ids)
        assert doc["shape"] == list(avg.matrix.shape)

    def test_difference_skips_structural_zero_rows(self, passthrough_tree, tmp_path):
        diff = build_difference(passthrough_tree)
        path = tmp_path / "diff.csv"
        write_transform_triplets(diff, path)
        body = path.read_text().strip().splitlines()[1:]
        rows_present = {int(ln.split(",")[0]) for ln in body}
        # the pass-through leaf contributes no entries at all
        zero_rows = {
            k
            for k in range(diff.matrix.shape[0])
            if diff.matrix[k].nnz == 0
        }
        assert zero_rows and rows_present.isdisjoint(zero_rows)

    def test_multi_tree_sidecar_has_provenance_pairs(self, tmp_path):
        t1 = tree_from_partitions(4, [[(i,) for i in range(4)], [(0, 1), (2, 3)], [(0, 1, 2, 3)]])
        t2 = tree_from_partitions(4, [[(i,) for i in range(4)], [(0, 2), (1, 3)], [(0, 1, 2, 3)]])
        multi = build_multi_tree([t1, t2])
        side = tmp_path / "multi.json"
        write_transform_triplets(multi, tmp_path / "multi.csv", side)
        doc = json.loads(side.read_text())
        assert doc["kind"] == "multi_averaging"
        assert doc["rows"] == [list(p) for p in multi.folder_provenance]


class TestLabelFiles:
    def test_round_trip_with_header(self, tmp_path):
        path = tmp_path / "lab.csv"
        write_labels(["s1", "s2"], ["a", "b"], path)
        assert read_labels(path) == {"s1": "a", "s2": "b"}

    def test_headerless_table(self, tmp_path):
        path = tmp_path / "lab.csv"
        path.write_text("s1,a\ns2,b\n")
        assert read_labels(path) == {"s1": "a", "s2": "b"}

    def test_duplicate_id_reports_line(self, tmp_path):
        path = tmp_path / "lab.csv"
        path.write_text("id,label\ns1,a\ns1,b\n")
        with pytest.raises(ValueError, match="line 3"):
            read_labels(path)

    def test_missing_label_reports_line(self, tmp_path):
        path = tmp_path / "lab.csv"
        path.write_text("s1,a\ns2\n")
        with pytest.raises(ValueError, match="line 2"):
            read_labels(path)


class TestSurvivalFiles:
    def test_read_valid_table(self, tmp_path):
        path = tmp_path / "surv.csv"
        path.write_text(
            "id,time,event,group\np1,5.0,1,a\np2,3.5,0,b\np3,2.0,true,a\n"
        )
        ids, times, events, groups = read_survival(path)
        assert ids == ["p1", "p2", "p3"]
        assert times.tolist() == [5.0, 3.5, 2.0]
        assert events.tolist() == [True, False, True]
        assert groups == ["a", "b", "a"]

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "surv.csv"
        path.write_text("id,time,status,group\np1,5.0,1,a\n")
        with pytest.raises(ValueError, match="expected header"):
            read_survival(path)

    def test_bad_event_value(self, tmp_path):
        path = tmp_path / "surv.csv"
        path.write_text("id,time,event,group\np1,5.0,maybe,a\n")
        with pytest.raises(ValueError, match="line 2"):
            read_survival(path)

    def test_negative_time_rejected(self, tmp_path):
        path = tmp_path / "surv.csv"
        path.write_text("id,time,event,group\np1,-1.0,1,a\n")
        with pytest.raises(ValueError, match="line 2"):
            read_survival(path)


class TestJsonWriter:
    def test_sorted_keys_and_trailing_newline(self, tmp_path):
        path = tmp_path / "doc.json"
        write_json({"b": 1, "a": [1, 2]}, path)
        text = path.read_text()
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [1, 2], "b": 1}
