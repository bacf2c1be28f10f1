import json
import subprocess
import sys

import numpy as np
import pytest

from treeorg import io
from treeorg.cli import main
from treeorg.core import DataMatrix, validate_tree


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    assert run("synth", "--size", "24x20", "--blocks", "2x2",
               "--noise", "0.3", "--seed", "5", "--out-dir", out) == 0
    return out


@pytest.fixture
def biorg_dir(tmp_path, synth_dir):
    out = tmp_path / "biorg"
    assert run("biorg", "--input", synth_dir / "z.csv",
               "--iterations", "1", "--out-dir", out) == 0
    return out


class TestSynth:
    def test_writes_matrix_and_labels(self, synth_dir):
        data = io.read_matrix(synth_dir / "z.csv")
        assert data.values.shape == (24, 20)
        rows = io.read_labels(synth_dir / "row_labels.csv")
        cols = io.read_labels(synth_dir / "col_labels.csv")
        assert len(rows) == 24 and len(cols) == 20

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("synth", "--size", "12x10", "--seed", "7", "--out-dir", out) == 0
        assert (a / "z.csv").read_bytes() == (b / "z.csv").read_bytes()

    def test_different_seed_different_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("synth", "--size", "12x10", "--seed", "7", "--out-dir", a) == 0
        assert run("synth", "--size", "12x10", "--seed", "8", "--out-dir", b) == 0
        assert (a / "z.csv").read_bytes() != (b / "z.csv").read_bytes()

    def test_seed_position_is_irrelevant(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("--seed", "9", "synth", "--size", "12x10", "--out-dir", a) == 0
        assert run("synth", "--size", "12x10", "--seed", "9", "--out-dir", b) == 0
        assert (a / "z.csv").read_bytes() == (b / "z.csv").read_bytes()

    def test_hierarchical_adds_fine_labels(self, tmp_path):
        out = tmp_path / "h"
        assert run("synth", "--size", "18x18", "--blocks", "3x3",
                   "--hierarchical", "--out-dir", out) == 0
        assert (out / "row_labels_fine.csv").exists()
        assert (out / "col_labels_fine.csv").exists()

    def test_bad_size_is_an_error(self, tmp_path, capsys):
        assert run("synth", "--size", "abc", "--out-dir", tmp_path / "x") == 1
        assert "must look like" in capsys.readouterr().err


class TestBuildTree:
    def test_tree_covers_the_requested_axis(self, tmp_path, synth_dir):
        out = tmp_path / "tree.json"
        assert run("build-tree", "--input", synth_dir / "z.csv",
                   "--axis", "cols", "--out", out) == 0
        tree = io.load_tree(out)
        assert tree.axis_size == 20
        assert validate_tree(tree).ok

    def test_missing_input_fails_cleanly(self, tmp_path, capsys):
        assert run("build-tree", "--input", tmp_path / "nope.csv",
                   "--out", tmp_path / "t.json") == 1
        assert "error:" in capsys.readouterr().err


class TestBiorg:
    def test_writes_all_artifacts(self, biorg_dir):
        tx = io.load_tree(biorg_dir / "tree_x.json")
        ty = io.load_tree(biorg_dir / "tree_y.json")
        assert tx.axis_size == 24 and ty.axis_size == 20
        trace = np.loadtxt(biorg_dir / "coherence.csv", delimiter=",", ndmin=2)
        assert trace.size == 1
        rows = np.loadtxt(biorg_dir / "order_rows.csv", delimiter=",").astype(int)
        cols = np.loadtxt(biorg_dir / "order_cols.csv", delimiter=",").astype(int)
        assert sorted(rows.tolist()) == list(range(24))
        assert sorted(cols.tolist()) == list(range(20))

    def test_optional_heatmap(self, tmp_path, synth_dir):
        svg = tmp_path / "z.svg"
        assert run("biorg", "--input", synth_dir / "z.csv", "--iterations", "1",
                   "--out-dir", tmp_path / "o", "--heatmap", svg) == 0
        assert svg.read_text().startswith("<svg ")

    def test_artifacts_identical_across_thread_counts(self, tmp_path, synth_dir):
        outs = []
        for threads in ("1", "4"):
            out = tmp_path / f"t{threads}"
            assert run("biorg", "--input", synth_dir / "z.csv", "--iterations", "2",
                       "--threads", threads, "--out-dir", out) == 0
            outs.append(out)
        for name in ("tree_x.json", "tree_y.json", "coherence.csv",
                     "order_rows.csv", "order_cols.csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


class TestMetric:
    def test_distance_table_properties(self, tmp_path, synth_dir, biorg_dir):
        # distances between rows use the tree over the column axis
        out = tmp_path / "d.csv"
        assert run("metric", "--input", synth_dir / "z.csv",
                   "--tree", biorg_dir / "tree_y.json",
                   "--axis", "rows", "--weights", "size_beta", "--beta", "1.0",
                   "--out", out) == 0
        d, ids = io.read_distances(out)
        assert len(ids) == 24
        assert np.allclose(d, d.T)
        assert np.all(np.diag(d) == 0)

    def test_matches_library_call(self, tmp_path, synth_dir, biorg_dir):
        from treeorg.metrics import folder_weights, pairwise_distances

        out = tmp_path / "d.csv"
        assert run("metric", "--input", synth_dir / "z.csv",
                   "--tree", biorg_dir / "tree_x.json",
                   "--axis", "cols", "--weights", "size_beta", "--beta", "0.5",
                   "--out", out) == 0
        d, _ = io.read_distances(out)
        data = io.read_matrix(synth_dir / "z.csv")
        tree = io.load_tree(biorg_dir / "tree_x.json")
        w = folder_weights(tree, "size_beta", beta=0.5)
        assert np.array_equal(d, pairwise_distances(tree, w, data, axis="cols"))


class TestTransform:
    def test_triplets_sidecar_and_application(self, tmp_path, synth_dir, biorg_dir):
        trip = tmp_path / "avg.csv"
        side = tmp_path / "avg.json"
        mat = tmp_path / "applied.csv"
        assert run("transform", "--tree", biorg_dir / "tree_x.json",
                   "--kind", "averaging", "--out", trip, "--sidecar", side,
                   "--input", synth_dir / "z.csv", "--apply-axis", "rows",
                   "--matrix-out", mat) == 0
        doc = json.loads(side.read_text())
        assert doc["kind"] == "averaging"
        tree = io.load_tree(biorg_dir / "tree_x.json")
        assert doc["shape"] == [tree.n_folders, 24]
        applied = np.loadtxt(mat, delimiter=",")
        assert applied.shape == (tree.n_folders, 20)


class TestCoherence:
    def test_prints_and_writes_the_same_value(self, tmp_path, synth_dir, biorg_dir, capsys):
        out = tmp_path / "c.json"
        assert run("coherence", "--input", synth_dir / "z.csv",
                   "--tree-x", biorg_dir / "tree_x.json",
                   "--tree-y", biorg_dir / "tree_y.json", "--out", out) == 0
        printed = float(capsys.readouterr().out.strip())
        stored = json.loads(out.read_text())["coherence"]
        assert printed == stored > 0


class TestRefine:
    def test_refines_and_reports_coherence(self, tmp_path, synth_dir, biorg_dir):
        out = tmp_path / "ref"
        assert run("refine", "--input", synth_dir / "z.csv",
                   "--tree-x", biorg_dir / "tree_x.json",
                   "--tree-y", biorg_dir / "tree_y.json",
                   "--level", "1", "--iterations", "1", "--out-dir", out) == 0
        refined = io.load_tree(out / "tree_y_refined.json")
        assert refined.axis_size == 20
        doc = json.loads((out / "coherence.json").read_text())
        assert set(doc) == {"coherence_global", "coherence_refined"}
        ty = io.load_tree(biorg_dir / "tree_y.json")
        n_folders_at_level = len(ty.levels[1])
        assert all(
            (out / f"feature_tree_{k}.json").exists()
            for k in range(n_folders_at_level)
        )

    def test_both_axes(self, tmp_path, synth_dir, biorg_dir):
        out = tmp_path / "ref2"
        assert run("refine", "--input", synth_dir / "z.csv",
                   "--tree-x", biorg_dir / "tree_x.json",
                   "--tree-y", biorg_dir / "tree_y.json",
                   "--level", "1", "--axis", "both",
                   "--iterations", "1", "--out-dir", out) == 0
        assert (out / "tree_x_refined.json").exists()
        assert (out / "tree_y_refined.json").exists()


class TestEvaluate:
    def test_label_agreement_json(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_labels(["s1", "s2", "s3", "s4"], ["x", "x", "y", "y"], a)
        io.write_labels(["s1", "s2", "s3", "s4"], ["1", "1", "2", "2"], b)
        assert run("evaluate", "--labels", a, "--labels-ref", b) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["rand_index"] == 1.0
        assert doc["adjusted_rand_index"] == 1.0
        assert doc["variation_of_information"] == 0.0

    def test_survival_json(self, tmp_path):
        surv = tmp_path / "surv.csv"
        surv.write_text(
            "id,time,event,group\n"
            + "".join(f"p{i},{t},1,a\n" for i, t in enumerate([1, 2, 3, 4, 5]))
            + "".join(f"q{i},{t},1,b\n" for i, t in enumerate([6, 7, 8, 9, 10]))
        )
        out = tmp_path / "res.json"
        assert run("evaluate", "--survival", surv, "--out", out) == 0
        doc = json.loads(out.read_text())
        assert doc["log_rank_df"] == 1
        assert doc["log_rank_statistic"] > 0
        assert 0 <= doc["log_rank_p"] <= 1
        assert set(doc["kaplan_meier"]) == {"a", "b"}

    def test_mismatched_ids_fail(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_labels(["s1"], ["x"], a)
        io.write_labels(["s9"], ["x"], b)
        assert run("evaluate", "--labels", a, "--labels-ref", b) == 1
        assert "different ids" in capsys.readouterr().err

    def test_needs_some_input(self, capsys):
        assert run("evaluate") == 1
        assert "evaluate needs" in capsys.readouterr().err


class TestInsert:
    def test_assignments_and_hierarchy(self, tmp_path, synth_dir, biorg_dir):
        data = io.read_matrix(synth_dir / "z.csv")
        new = DataMatrix(data.values[:, :4], data.feature_ids,
                         ("n1", "n2", "n3", "n4"))
        new_path = tmp_path / "new.csv"
        io.write_matrix(new, new_path)
        out = tmp_path / "ins"
        assert run("insert", "--train", synth_dir / "z.csv",
                   "--tree-x", biorg_dir / "tree_x.json",
                   "--tree-y", biorg_dir / "tree_y.json",
                   "--new", new_path, "--out-dir", out) == 0
        assignments = io.read_labels(out / "assignments.csv")
        ty = io.load_tree(biorg_dir / "tree_y.json")
        level1 = set(ty.levels[1])
        assert set(assignments) == {"n1", "n2", "n3", "n4"}
        assert all(int(v) in level1 for v in assignments.values())
        hierarchy = io.load_tree(out / "hierarchy.json")
        assert hierarchy.axis_size == 4


class TestHeatmapCommand:
    def test_orders_and_annotations(self, tmp_path, synth_dir, biorg_dir):
        order = tmp_path / "cols.csv"
        cols = np.loadtxt(biorg_dir / "order_cols.csv", delimiter=",").astype(int)
        order.write_text("\n".join(str(c) for c in cols) + "\n")
        out = tmp_path / "z.svg"
        assert run("heatmap", "--input", synth_dir / "z.csv",
                   "--order-cols", order,
                   "--annotations", synth_dir / "col_labels.csv",
                   "--out", out) == 0
        svg = out.read_text()
        assert svg.count("<title>label:") == 20

    def test_annotation_id_mismatch(self, tmp_path, synth_dir, capsys):
        bad = tmp_path / "bad.csv"
        io.write_labels(["zzz"], ["a"], bad)
        assert run("heatmap", "--input", synth_dir / "z.csv",
                   "--annotations", bad, "--out", tmp_path / "z.svg") == 1
        assert "misses column id" in capsys.readouterr().err


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "treeorg.cfg"
        cfg.write_text("seed = 11\nnoise = 0.1  # keep it clean\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("--config", cfg, "synth", "--size", "12x10", "--out-dir", a) == 0
        assert run("synth", "--size", "12x10", "--seed", "11",
                   "--noise", "0.1", "--out-dir", b) == 0
        assert (a / "z.csv").read_bytes() == (b / "z.csv").read_bytes()

    def test_explicit_flag_beats_config(self, tmp_path):
        cfg = tmp_path / "treeorg.cfg"
        cfg.write_text("seed = 11\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("--config", cfg, "synth", "--size", "12x10",
                   "--seed", "3", "--out-dir", a) == 0
        assert run("synth", "--size", "12x10", "--seed", "3", "--out-dir", b) == 0
        assert (a / "z.csv").read_bytes() == (b / "z.csv").read_bytes()

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "treeorg.cfg"
        cfg.write_text("sedd = 11\n")
        assert run("--config", cfg, "synth", "--out-dir", tmp_path / "x") == 1
        assert "unknown config keys: sedd" in capsys.readouterr().err

    def test_malformed_line_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "treeorg.cfg"
        cfg.write_text("seed 11\n")
        assert run("--config", cfg, "synth", "--out-dir", tmp_path / "x") == 1
        assert "config line 1" in capsys.readouterr().err


class TestEnvironment:
    def test_threads_env_var_is_the_default(self, tmp_path, synth_dir, monkeypatch):
        monkeypatch.setenv("TREEORG_THREADS", "2")
        out = tmp_path / "d.csv"
        tree_path = tmp_path / "t.json"
        assert run("build-tree", "--input", synth_dir / "z.csv",
                   "--axis", "rows", "--out", tree_path) == 0
        assert run("metric", "--input", synth_dir / "z.csv",
                   "--tree", tree_path, "--axis", "cols", "--out", out) == 0
        assert out.exists()

    def test_module_entry_point(self):
        res = subprocess.run(
            [sys.executable, "-m", "treeorg", "--help"],
            capture_output=True, text=True,
        )
        assert res.returncode == 0
        assert "partition trees" in res.stdout
