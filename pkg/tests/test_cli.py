import json
import pathlib

import numpy as np
import pytest

from fuzzent.cli import main

IRIS = str(pathlib.Path(__file__).parent / "data" / "iris.csv")


def run(argv):
    return main(argv)


class TestTopLevel:
    def test_list_variants(self, capsys):
        assert run(["--list-variants"]) == 0
        out = capsys.readouterr().out
        for name in ("fcm-er-l2", "afcm-er-gs-l1", "afcm-er-mk", "afcm-er-lp-l2"):
            assert name in out

    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run([])
        assert err.value.code == 2


class TestGenerate:
    def test_config_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "cfg2.csv"
        assert run(["generate", "--experiment", "config2", "--seed", "7", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 451
        assert lines[0] == "x1,x2,label"

    def test_outliers_pct_20(self, tmp_path):
        out = tmp_path / "o.csv"
        assert run(
            ["generate", "--experiment", "outliers", "--pct", "20", "--seed", "1", "--out", str(out)]
        ) == 0
        assert len(out.read_text().splitlines()) == 97  # header + 80 + 16

    def test_invalid_pct_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(
                ["generate", "--experiment", "outliers", "--pct", "15", "--seed", "1",
                 "--out", str(tmp_path / "x.csv")]
            )
        assert err.value.code == 2

    def test_outliers_require_pct(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(["generate", "--experiment", "outliers", "--seed", "1", "--out", str(tmp_path / "x.csv")])
        assert err.value.code == 2


class TestCluster:
    def _cluster(self, tmp_path, out_name, extra=()):
        out_dir = tmp_path / out_name
        argv = [
            "cluster", IRIS, "--variant", "fcm-er-l2", "--clusters", "3",
            "--tu", "0.4", "--restarts", "3", "--seed", "1", "--standardize",
            "--label-column", "species", "--out-dir", str(out_dir),
        ] + list(extra)
        assert run(argv) == 0
        return out_dir

    def test_writes_all_outputs(self, tmp_path, capsys):
        out_dir = self._cluster(tmp_path, "run")
        for name in (
            "memberships.csv",
            "prototypes.csv",
            "assignments.csv",
            "objective_trace.csv",
            "manifest.json",
        ):
            assert (out_dir / name).exists(), name
        printed = capsys.readouterr().out
        assert "ARI" in printed and "HUL" in printed
        memberships = (out_dir / "memberships.csv").read_text().splitlines()
        assert len(memberships) == 151
        assert memberships[0] == "cluster_0,cluster_1,cluster_2"

    def test_metric_file_only_for_adaptive_variants(self, tmp_path):
        plain = self._cluster(tmp_path, "plain")
        assert not (plain / "metric.csv").exists()
        out_dir = tmp_path / "gp"
        assert run(
            ["cluster", IRIS, "--variant", "afcm-er-gp-l1", "--clusters", "3", "--tu", "0.4",
             "--seed", "1", "--standardize", "--label-column", "species", "--out-dir", str(out_dir)]
        ) == 0
        weights = (out_dir / "metric.csv").read_text().splitlines()
        assert len(weights) == 2
        values = [float(v) for v in weights[1].split(",")]
        assert np.prod(values) == pytest.approx(1.0, abs=1e-6)

    def test_byte_identical_reruns(self, tmp_path):
        a = self._cluster(tmp_path, "a")
        b = self._cluster(tmp_path, "b")
        for name in ("memberships.csv", "prototypes.csv", "assignments.csv", "objective_trace.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_manifest_replay_reproduces_outputs(self, tmp_path):
        first = self._cluster(tmp_path, "orig")
        replay_dir = tmp_path / "replay"
        assert run(
            ["cluster", "--from-manifest", str(first / "manifest.json"), "--out-dir", str(replay_dir)]
        ) == 0
        for name in ("memberships.csv", "prototypes.csv", "assignments.csv", "objective_trace.csv"):
            assert (first / name).read_bytes() == (replay_dir / name).read_bytes(), name
        manifest = json.loads((replay_dir / "manifest.json").read_text())
        assert manifest["spec"]["t_u"] == 0.4

    def test_missing_clusters_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(["cluster", IRIS, "--variant", "fcm-er-l2", "--out-dir", str(tmp_path / "x")])
        assert err.value.code == 2

    def test_unknown_variant_is_data_error(self, tmp_path):
        code = run(
            ["cluster", IRIS, "--variant", "fcm-er-l9", "--clusters", "3", "--tu", "1.0",
             "--out-dir", str(tmp_path / "x")]
        )
        assert code == 1

    def test_missing_input_file(self, tmp_path):
        code = run(
            ["cluster", str(tmp_path / "none.csv"), "--variant", "fcm-er-l2", "--clusters", "2",
             "--tu", "1.0", "--out-dir", str(tmp_path / "x")]
        )
        assert code == 1


class TestTune:
    def test_prints_tu(self, tmp_path, capsys):
        assert run(
            ["tune", IRIS, "--variant", "fcm-er-l2", "--clusters", "3", "--label-column", "species",
             "--standardize", "--tu-min", "0.05", "--tu-max", "4.0", "--tu-step", "0.05",
             "--seed", "0", "--curve-out", str(tmp_path / "curve.csv")]
        ) == 0
        out = capsys.readouterr().out
        assert out.startswith("t_u ")
        curve = (tmp_path / "curve.csv").read_text().splitlines()
        assert curve[0] == "t_u,min_centroid_distance"
        assert len(curve) >= 3

    def test_tv_variant_prints_both(self, capsys):
        assert run(
            ["tune", IRIS, "--variant", "afcm-er-gs-l2", "--clusters", "3",
             "--label-column", "species", "--standardize", "--tu-min", "0.05",
             "--tu-max", "4.0", "--tu-step", "0.05", "--tv-grid", "5.0,50.0", "--seed", "0"]
        ) == 0
        out = capsys.readouterr().out
        assert "t_u " in out and "t_v " in out


class TestEvaluate:
    @pytest.fixture()
    def artifacts(self, tmp_path):
        out_dir = tmp_path / "fit"
        run(
            ["cluster", IRIS, "--variant", "fcm-er-l2", "--clusters", "3", "--tu", "0.4",
             "--restarts", "5", "--seed", "1", "--standardize", "--label-column", "species",
             "--out-dir", str(out_dir)]
        )
        return out_dir

    def test_json_matches_table(self, artifacts, capsys):
        argv = ["evaluate", "--membership", str(artifacts / "memberships.csv"),
                "--labels", IRIS, "--label-column", "species"]
        assert run(argv) == 0
        table = capsys.readouterr().out
        assert run(argv + ["--json"]) == 0
        values = json.loads(capsys.readouterr().out)
        for key in ("hul", "ari"):
            assert f"{values[key]:.4f}" in table

    def test_perfect_partition_scores_one(self, tmp_path, capsys):
        member = tmp_path / "u.csv"
        member.write_text("cluster_0,cluster_1\n" + "1,0\n" * 3 + "0,1\n" * 3)
        labels = tmp_path / "labels.csv"
        labels.write_text("label\n" + "a\n" * 3 + "b\n" * 3)
        assert run(
            ["evaluate", "--membership", str(member), "--labels", str(labels), "--json"]
        ) == 0
        values = json.loads(capsys.readouterr().out)
        assert values["ari"] == pytest.approx(1.0)
        assert values["hul"] == pytest.approx(1.0)

    def test_rd_requires_both_flags(self, artifacts):
        with pytest.raises(SystemExit) as err:
            run(
                ["evaluate", "--membership", str(artifacts / "memberships.csv"),
                 "--labels", IRIS, "--label-column", "species",
                 "--prototypes", str(artifacts / "prototypes.csv")]
            )
        assert err.value.code == 2

    def test_rd_of_ideal_prototypes_is_one(self, tmp_path, capsys):
        member = tmp_path / "u.csv"
        member.write_text("cluster_0,cluster_1\n1,0\n0,1\n")
        labels = tmp_path / "labels.csv"
        labels.write_text("label\na\nb\n")
        protos = tmp_path / "g.csv"
        protos.write_text("x1,x2\n0,0\n0.8,0.8\n")
        ideal = tmp_path / "ideal.csv"
        ideal.write_text("x1,x2\n0,0\n0.8,0.8\n")
        assert run(
            ["evaluate", "--membership", str(member), "--labels", str(labels),
             "--prototypes", str(protos), "--ideal-centers", str(ideal), "--json"]
        ) == 0
        values = json.loads(capsys.readouterr().out)
        assert values["rd"] == pytest.approx(1.0, abs=1e-12)


class TestExperiment:
    def test_small_run_writes_report(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        assert run(
            ["experiment", "--experiment", "outliers", "--pct", "10",
             "--variants", "fcm-er-l1,fcm-er-l2", "--replications", "2", "--restarts", "2",
             "--seed", "3", "--tu", "0.3", "--out", str(out)]
        ) == 0
        text = capsys.readouterr().out
        assert "fcm-er-l1" in text
        lines = out.read_text().splitlines()
        assert lines[0] == "variant,index,mean,std"
        assert len(lines) == 7  # 2 variants x 3 indices

    def test_zero_replications_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(
                ["experiment", "--experiment", "config1", "--variants", "fcm-er-l2",
                 "--replications", "0", "--restarts", "1", "--tu", "0.3"]
            )
        assert err.value.code == 2

    def test_tv_required_with_fixed_tu_for_gs(self):
        with pytest.raises(SystemExit) as err:
            run(
                ["experiment", "--experiment", "config1", "--variants", "afcm-er-gs-l2",
                 "--replications", "1", "--restarts", "1", "--tu", "0.3"]
            )
        assert err.value.code == 2

    def test_same_seed_same_bytes(self, tmp_path):
        argv = ["experiment", "--experiment", "config1", "--variants", "fcm-er-l2",
                "--replications", "2", "--restarts", "2", "--seed", "5", "--tu", "0.3"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run(argv + ["--out", str(a)]) == 0
        assert run(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
