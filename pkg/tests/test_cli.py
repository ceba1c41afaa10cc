"""Command-line interface: full pipeline flow, exit codes, determinism."""

import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from msfax.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """simulate -> fit -> benchmark -> evaluate -> network, all on disk."""
    root = tmp_path_factory.mktemp("pipeline")
    sim = root / "sim"
    fit = root / "fit"
    bench = root / "bench"
    assert main(["simulate", "--setting", "few-predictors",
                 "--out", str(sim)]) == 0
    manifest = sim / "rep1" / "manifest.json"
    # --data accepts the replicate directory or its manifest; use one of
    # each so both forms stay covered.
    assert main(["fit", "--data", str(sim / "rep1"), "--k", "2", "--j", "2,2",
                 "--starts", "1", "--out", str(fit)]) == 0
    assert main(["benchmark", "--data", str(manifest),
                 "--out", str(bench)]) == 0
    return root


class TestSimulate:
    def test_writes_replicate_directories(self, tmp_path, capsys):
        code, out, _ = run(["simulate", "--setting", "few-predictors",
                            "--reps", "2", "--out", str(tmp_path)], capsys)
        assert code == 0
        for rep in ("rep1", "rep2"):
            d = tmp_path / rep
            assert (d / "manifest.json").is_file()
            assert (d / "truth_model.json").is_file()
            assert (d / "shared.matrix.csv").is_file()
            assert (d / "study1.matrix.csv").is_file()
            assert (d / "study2.matrix.csv").is_file()
        # replicates share the truth but not the data
        m1 = json.loads((tmp_path / "rep1" / "truth_model.json").read_text())
        m2 = json.loads((tmp_path / "rep2" / "truth_model.json").read_text())
        assert m1 == m2
        x1 = (tmp_path / "rep1" / "study1.csv").read_bytes()
        x2 = (tmp_path / "rep2" / "study1.csv").read_bytes()
        assert x1 != x2

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            code, _, _ = run(["simulate", "--setting", "few-predictors",
                              "--out", str(out)], capsys)
            assert code == 0
        for name in ("manifest.json", "truth_model.json", "study1.csv",
                     "study2.csv", "shared.matrix.csv"):
            assert (a / "rep1" / name).read_bytes() == \
                (b / "rep1" / name).read_bytes()

    def test_zero_reps_is_an_error(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--reps", "0",
                            "--out", str(tmp_path)], capsys)
        assert code == 2
        assert "reps" in err

    def test_unknown_setting_exits_2(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--setting", "no-such",
                            "--out", str(tmp_path)], capsys)
        assert code == 2
        assert "unknown setting" in err

    def test_seed_override_changes_truth(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["simulate", "--setting", "few-predictors", "--out", str(a)],
            capsys)
        run(["simulate", "--setting", "few-predictors", "--seed", "9",
             "--out", str(b)], capsys)
        ma = json.loads((a / "rep1" / "truth_model.json").read_text())
        mb = json.loads((b / "rep1" / "truth_model.json").read_text())
        assert ma["phi"] != mb["phi"]


class TestFit:
    def test_outputs(self, pipeline_dir):
        fit = pipeline_dir / "fit"
        assert (fit / "model.json").is_file()
        assert (fit / "trace.csv").is_file()
        assert (fit / "shared.matrix.csv").is_file()
        assert (fit / "shared.edges.csv").is_file()
        assert (fit / "study2.matrix.csv").is_file()
        trace = pd.read_csv(fit / "trace.csv")
        assert (trace.loglik.diff().dropna() >= -1e-6 * abs(
            trace.loglik.iloc[-1])).all()

    def test_missing_counts_exit_2(self, pipeline_dir, capsys):
        manifest = pipeline_dir / "sim" / "rep1" / "manifest.json"
        code, _, err = run(["fit", "--data", str(manifest)], capsys)
        assert code == 2
        assert "--auto-factors" in err

    def test_infeasible_counts_exit_3(self, pipeline_dir, tmp_path, capsys):
        manifest = pipeline_dir / "sim" / "rep1" / "manifest.json"
        code, _, err = run(["fit", "--data", str(manifest), "--k", "6",
                            "--j", "6,6", "--out", str(tmp_path)], capsys)
        assert code == 3
        assert "free parameters" in err

    def test_missing_file_exit_2(self, tmp_path, capsys):
        code, _, _ = run(["fit", "--data", str(tmp_path / "nope.json"),
                          "--k", "1", "--j", "1,1"], capsys)
        assert code == 2

    def test_auto_factors_reports_json(self, pipeline_dir, tmp_path, capsys):
        manifest = pipeline_dir / "sim" / "rep1" / "manifest.json"
        code, out, _ = run(["fit", "--data", str(manifest), "--auto-factors",
                            "--starts", "1", "--out", str(tmp_path)], capsys)
        assert code == 0
        line = next(l for l in out.splitlines() if l.startswith("{"))
        report = json.loads(line)
        assert set(report) == {"t", "k", "j", "fractions"}
        assert report["k"] >= 1
        assert len(report["j"]) == 2
        assert len(report["t"]) == 2
        assert all(0.0 <= f <= 1.0 for f in report["fractions"])


class TestBenchmark:
    def test_outputs(self, pipeline_dir):
        bench = pipeline_dir / "bench"
        assert (bench / "shared.matrix.csv").is_file()
        assert (bench / "selection.csv").is_file()
        sel = pd.read_csv(bench / "selection.csv")
        assert {"fit", "lam", "loglik", "edges", "bic"} <= set(sel.columns)
        assert set(sel.fit) == {"pooled", "study1", "study2"}


class TestEvaluate:
    def test_fit_networks_score_against_truth(self, pipeline_dir, tmp_path,
                                              capsys):
        truth = pipeline_dir / "sim" / "rep1" / "truth_model.json"
        code, _, _ = run([
            "evaluate", "--estimated", str(pipeline_dir / "fit"),
            "--truth", str(truth), "--method", "msfa",
            "--setting", "few-predictors", "--out", str(tmp_path),
        ], capsys)
        assert code == 0
        frame = pd.read_csv(tmp_path / "metrics.csv")
        assert set(frame.target) == {"shared", "study1", "study2"}
        rv = frame[(frame.target == "shared") & (frame.metric == "rv")]
        assert rv.value.iloc[0] > 0.9

    def test_directory_truth_and_default_method(self, pipeline_dir, tmp_path,
                                                capsys):
        # --truth may name the replicate directory (truth_model.json inside)
        # and --method defaults to the fitter's label.
        code, _, _ = run([
            "evaluate", "--estimated", str(pipeline_dir / "fit"),
            "--truth", str(pipeline_dir / "sim" / "rep1"),
            "--out", str(tmp_path),
        ], capsys)
        assert code == 0
        frame = pd.read_csv(tmp_path / "metrics.csv")
        assert set(frame.method) == {"msfa"}

    def test_missing_networks_exit_2(self, pipeline_dir, tmp_path, capsys):
        truth = pipeline_dir / "sim" / "rep1" / "truth_model.json"
        code, _, _ = run([
            "evaluate", "--estimated", str(tmp_path),
            "--truth", str(truth), "--method", "m",
        ], capsys)
        assert code == 2


class TestNetwork:
    def test_threshold_value(self, pipeline_dir, tmp_path, capsys):
        model = pipeline_dir / "fit" / "model.json"
        code, _, _ = run(["network", "--model", str(model),
                          "--threshold-value", "0.5",
                          "--out", str(tmp_path)], capsys)
        assert code == 0
        net = pd.read_csv(tmp_path / "shared.matrix.csv", index_col=0)
        vals = net.to_numpy()
        nonzero = vals[vals != 0.0]
        assert nonzero.size == 0 or np.abs(nonzero).min() > 0.5

    def test_threshold_alpha_with_hubs(self, pipeline_dir, tmp_path, capsys):
        model = pipeline_dir / "fit" / "model.json"
        code, out, _ = run(["network", "--model", str(model),
                            "--threshold-alpha", "0.05", "--n", "1600",
                            "--hubs", "--out", str(tmp_path)], capsys)
        assert code == 0
        assert "threshold" in out
        hubs = pd.read_csv(tmp_path / "hubs.csv")
        assert set(hubs.columns) == {"network", "node", "score"}
        assert set(hubs.network) == {"shared", "study1", "study2"}
        assert hubs.score.between(0.0, 1.0).all()

    def test_both_threshold_flags_exit_2(self, pipeline_dir, capsys):
        model = pipeline_dir / "fit" / "model.json"
        code, _, err = run(["network", "--model", str(model),
                            "--threshold-value", "0.1",
                            "--threshold-alpha", "0.05", "--n", "100"],
                           capsys)
        assert code == 2
        assert "either" in err

    def test_alpha_needs_n(self, pipeline_dir, capsys):
        model = pipeline_dir / "fit" / "model.json"
        code, _, err = run(["network", "--model", str(model),
                            "--threshold-alpha", "0.05"], capsys)
        assert code == 2
        assert "--n" in err


class TestStudy:
    def test_summary_files(self, tmp_path, capsys):
        code, _, _ = run([
            "study", "--settings", "few-predictors", "--reps", "2",
            "--methods", "msfa", "--starts", "1", "--out", str(tmp_path),
        ], capsys)
        assert code == 0
        long = pd.read_csv(tmp_path / "metrics_long.csv")
        assert set(long.method) == {"msfa"}
        assert long.replicate.nunique() == 2
        table = pd.read_csv(tmp_path / "summary_table.csv")
        assert "rv" in table.columns


class TestConfigAndMisc:
    def test_config_file_supplies_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"setting": "few-predictors",
                                   "out": str(tmp_path / "o")}))
        code, _, _ = run(["simulate", "--config", str(cfg)], capsys)
        assert code == 0
        assert (tmp_path / "o" / "rep1" / "manifest.json").is_file()

    def test_explicit_flag_beats_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"reps": 2}))
        code, _, _ = run(["simulate", "--setting", "few-predictors",
                          "--reps", "1", "--config", str(cfg),
                          "--out", str(tmp_path / "o")], capsys)
        assert code == 0
        assert not (tmp_path / "o" / "rep2").exists()

    def test_unknown_config_key_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code, _, err = run(["simulate", "--config", str(cfg)], capsys)
        assert code == 2
        assert "unknown config keys" in err

    def test_malformed_config_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        code, _, _ = run(["simulate", "--config", str(cfg)], capsys)
        assert code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        out, _ = capsys.readouterr()
        assert out.strip()

    def test_installed_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "msfax", "simulate",
             "--setting", "few-predictors", "--out", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert (tmp_path / "rep1" / "manifest.json").is_file()
