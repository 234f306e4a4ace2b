import json
import os

import numpy as np
import numpy.testing as npt
import pytest

from gtnlab import cli, core, csvio
from gtnlab.core import LabeledDataset
from gtnlab.experiments import ExperimentConfig, preset_config


class TestPointsCsv:
    def test_lossless_roundtrip(self, tmp_path):
        pts = core.make_rng(0).standard_normal((50, 3)) * np.array([1e-12, 1.0, 1e14])
        path = tmp_path / "pts.csv"
        csvio.write_points_csv(path, pts)
        npt.assert_array_equal(csvio.read_points_csv(path), pts)
        assert path.read_text().splitlines()[0] == "x0,x1,x2"

    def test_headerless_numeric_file(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("1.5,2.5\n3.5,4.5\n")
        npt.assert_array_equal(csvio.read_points_csv(path), [[1.5, 2.5], [3.5, 4.5]])

    def test_ragged_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x0,x1\n1,2\n3\n")
        with pytest.raises(ValueError, match="line 3"):
            csvio.read_points_csv(path)

    def test_non_numeric_reports_line_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x0,x1\n1,2\n3,oops\n")
        with pytest.raises(ValueError, match=r"line 3.*column 1"):
            csvio.read_points_csv(path)

    def test_header_only_is_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("x0,x1\n")
        with pytest.raises(ValueError, match="empty dataset"):
            csvio.read_points_csv(path)


class TestPairsCsv:
    def test_roundtrip_with_clusters(self, tmp_path):
        rng = core.make_rng(1)
        lab = LabeledDataset(
            sources=rng.standard_normal((20, 2)),
            targets=rng.standard_normal((20, 2)),
            clusters=rng.integers(0, 2, 20),
        )
        path = tmp_path / "pairs.csv"
        csvio.write_pairs_csv(path, lab)
        assert path.read_text().splitlines()[0] == "y0,y1,x0,x1,cluster"
        again = csvio.read_pairs_csv(path)
        npt.assert_array_equal(again.sources, lab.sources)
        npt.assert_array_equal(again.targets, lab.targets)
        npt.assert_array_equal(again.clusters, lab.clusters)

    def test_roundtrip_without_clusters(self, tmp_path):
        rng = core.make_rng(2)
        lab = LabeledDataset(sources=rng.standard_normal((9, 1)), targets=rng.standard_normal((9, 1)))
        path = tmp_path / "pairs.csv"
        csvio.write_pairs_csv(path, lab)
        again = csvio.read_pairs_csv(path)
        npt.assert_array_equal(again.sources, lab.sources)
        assert again.clusters is None


def _write_points(path, pts):
    csvio.write_points_csv(path, pts)
    return str(path)


class TestCliLabel:
    def test_labels_1000_rows(self, tmp_path, capsys):
        data = _write_points(tmp_path / "data.csv", core.make_rng(3).standard_normal((1000, 1)))
        out = tmp_path / "pairs.csv"
        assert cli.main(["label", "--data", data, "--out", str(out), "--seed", "3"]) == 0
        assert "1000 pairs" in capsys.readouterr().out
        assert csvio.read_pairs_csv(out).n == 1000

    def test_header_only_errors(self, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("x0\n")
        rc = cli.main(["label", "--data", str(path), "--out", str(tmp_path / "o.csv")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("E_DATA: ")

    def test_clustered_adds_cluster_column(self, tmp_path):
        rng = core.make_rng(4)
        pts = np.vstack([rng.uniform(0, 1, (300, 2)), rng.uniform(6, 7, (300, 2))])
        data = _write_points(tmp_path / "data.csv", pts)
        out = tmp_path / "pairs.csv"
        assert cli.main(["label", "--data", data, "--out", str(out), "--clusters", "2"]) == 0
        assert "cluster" in out.read_text().splitlines()[0]


@pytest.fixture(scope="module")
def model_path(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli_model")
    rng = core.make_rng(5)
    y = rng.standard_normal((800, 1))
    lab = LabeledDataset(y, np.tanh(y))
    pairs = tmp / "pairs.csv"
    csvio.write_pairs_csv(pairs, lab)
    out = tmp / "model.bin"
    rc = cli.main(
        ["train", "--pairs", str(pairs), "--out", str(out), "--layers", "2", "--width", "6",
         "--max-epochs", "20", "--batch-size", "100", "--seed", "5"]
    )
    assert rc == 0 and out.exists()
    return str(out)


class TestCliTrainSampleEval:

    def test_sample_writes_n_rows(self, tmp_path, model_path):
        out = tmp_path / "samples.csv"
        assert cli.main(["sample", "--model", model_path, "--n", "200", "--seed", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 201 and lines[0] == "x0"

    def test_sample_deterministic_bytes(self, tmp_path, model_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["sample", "--model", model_path, "--n", "50", "--seed", "9", "--out", str(a)])
        cli.main(["sample", "--model", model_path, "--n", "50", "--seed", "9", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_sample_zero_rows(self, tmp_path, model_path):
        out = tmp_path / "zero.csv"
        assert cli.main(["sample", "--model", model_path, "--n", "0", "--out", str(out)]) == 0
        assert out.read_text() == "x0\n"

    def test_sample_missing_model(self, tmp_path, capsys):
        rc = cli.main(["sample", "--model", str(tmp_path / "nope.bin"), "--n", "5", "--out", str(tmp_path / "o.csv")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("E_IO: ")

    def test_sample_corrupt_model(self, tmp_path, capsys):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"garbage__" * 4)
        rc = cli.main(["sample", "--model", str(bad), "--n", "5", "--out", str(tmp_path / "o.csv")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("E_MODEL: ")

    def test_eval_identical_files(self, tmp_path, capsys):
        pts = core.make_rng(6).uniform(0, 1, (500, 2))
        gen = _write_points(tmp_path / "gen.csv", pts)
        out = tmp_path / "metrics.json"
        assert cli.main(["eval", "--generated", gen, "--reference", gen, "--out", str(out)]) == 0
        report = core.MetricsReport.from_json(out.read_text())
        assert abs(report.value("energy_distance")) < 1e-12

    def test_eval_dimension_mismatch(self, tmp_path, capsys):
        gen = _write_points(tmp_path / "gen.csv", np.ones((20, 2)))
        ref = _write_points(tmp_path / "ref.csv", np.ones((20, 3)))
        rc = cli.main(["eval", "--generated", gen, "--reference", ref, "--out", str(tmp_path / "m.json")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("E_DIM: ")

    def test_eval_requires_reference_or_preset(self, tmp_path, capsys):
        gen = _write_points(tmp_path / "gen.csv", np.ones((20, 2)))
        rc = cli.main(["eval", "--generated", gen, "--out", str(tmp_path / "m.json")])
        assert rc == 1
        err = capsys.readouterr().err
        assert err.startswith("E_CONFIG: ") and "--reference" in err

    def test_eval_swiss_preset_needs_model(self, tmp_path, capsys):
        gen = _write_points(tmp_path / "gen.csv", np.ones((20, 1)) * 10)
        rc = cli.main(["eval", "--generated", gen, "--preset", "swiss1d", "--out", str(tmp_path / "m.json")])
        assert rc == 1
        assert "E_CONFIG" in capsys.readouterr().err


class TestCliPlot:
    def test_scatter_2d(self, tmp_path):
        samples = _write_points(tmp_path / "s.csv", core.make_rng(7).uniform(0, 1, (100, 2)))
        out = tmp_path / "plot.png"
        assert cli.main(["plot", "--samples", samples, "--out", str(out)]) == 0
        assert out.stat().st_size > 0

    def test_swiss_style_embeds_1d(self, tmp_path):
        samples = _write_points(tmp_path / "s.csv", core.make_rng(8).uniform(5, 13, (100, 1)))
        out = tmp_path / "plot.png"
        assert cli.main(["plot", "--samples", samples, "--style", "swiss", "--out", str(out)]) == 0
        assert out.stat().st_size > 0

    def test_empty_csv_no_file(self, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("x0,x1\n")
        out = tmp_path / "plot.png"
        assert cli.main(["plot", "--samples", str(path), "--out", str(out)]) == 1
        assert not out.exists()

    def test_high_dim_suggests_dims_flag(self, tmp_path, capsys):
        samples = _write_points(tmp_path / "s.csv", np.ones((30, 5)))
        rc = cli.main(["plot", "--samples", samples, "--out", str(tmp_path / "p.png")])
        assert rc == 1
        assert "--dims" in capsys.readouterr().err

    def test_dims_selection_works(self, tmp_path):
        samples = _write_points(tmp_path / "s.csv", core.make_rng(9).standard_normal((30, 5)))
        out = tmp_path / "p.png"
        assert cli.main(["plot", "--samples", samples, "--dims", "0,3", "--out", str(out)]) == 0
        assert out.stat().st_size > 0


class TestCliRun:
    def test_small_swiss_run_and_determinism(self, tmp_path):
        args = [
            "run", "--experiment", "swiss1d", "--seed", "7",
            "--n-train", "2000", "--n-val", "500", "--n-generate", "300", "--max-epochs", "25",
        ]
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        assert cli.main(args + ["--out-dir", str(d1)]) == 0
        assert cli.main(args + ["--out-dir", str(d2)]) == 0
        for name in ("samples.csv", "pairs.csv", "model.bin", "metrics.json", "manifest.json", "plot.png"):
            assert (d1 / name).exists(), name
        assert (d1 / "samples.csv").read_bytes() == (d2 / "samples.csv").read_bytes()
        assert (d1 / "metrics.json").read_bytes() == (d2 / "metrics.json").read_bytes()
        manifest = json.loads((d1 / "manifest.json").read_text())
        assert set(manifest["timings_s"]) == {"data", "label", "train", "sample", "eval", "plot"}

    def test_custom_requires_data(self, tmp_path, capsys):
        rc = cli.main(["run", "--experiment", "custom", "--out-dir", str(tmp_path)])
        assert rc == 1
        assert capsys.readouterr().err.startswith("E_CONFIG: ")

    def test_custom_run(self, tmp_path):
        data = _write_points(tmp_path / "latent.csv", core.make_rng(10).standard_normal((1500, 3)) * 2 + 1)
        out = tmp_path / "run"
        rc = cli.main(
            ["run", "--experiment", "custom", "--data", data, "--out-dir", str(out),
             "--n-generate", "500", "--max-epochs", "15", "--layers", "2", "--width", "8"]
        )
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["mlp"]["input_dim"] == 3
        assert "plot" not in manifest["outputs"]  # d=3 has no scatter
        assert csvio.read_points_csv(out / "samples.csv").shape == (500, 3)

    def test_config_file_with_flag_override(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"n_train": 1500, "n_val": 400, "n_generate": 200,
                                        "train": preset_config("swiss1d", ".").to_dict()["train"] | {"max_epochs": 10}}))
        out = tmp_path / "run"
        rc = cli.main(
            ["run", "--experiment", "swiss1d", "--config", str(cfg_path), "--out-dir", str(out), "--n-generate", "150"]
        )
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["n_train"] == 1500  # from the file
        assert manifest["config"]["n_generate"] == 150  # flag wins

    def test_bad_config_json(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{not json")
        rc = cli.main(["run", "--experiment", "swiss1d", "--config", str(cfg_path), "--out-dir", str(tmp_path)])
        assert rc == 1
        assert capsys.readouterr().err.startswith("E_CONFIG: ")


class TestConfigRoundtrip:
    @pytest.mark.parametrize("experiment", ["swiss1d", "uniform2d", "disjoint_uniform"])
    def test_serialize_parse_serialize_idempotent(self, experiment):
        cfg = preset_config(experiment, "/tmp/x", seed=3)
        d1 = cfg.to_dict()
        d2 = ExperimentConfig.from_dict(d1).to_dict()
        assert d1 == d2


class TestThreadCap:
    def test_invalid_cap_is_config_error(self, monkeypatch, capsys):
        monkeypatch.setenv("GTN_LAB_THREADS", "zero")
        rc = cli.main(["plot", "--samples", "x.csv", "--out", "y.png"])
        assert rc == 1
        assert capsys.readouterr().err.startswith("E_CONFIG: ")

    def test_cap_sets_blas_envs(self, monkeypatch):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            monkeypatch.delenv(var, raising=False)
        monkeypatch.setenv("GTN_LAB_THREADS", "2")
        cli._apply_thread_cap()
        assert os.environ["OMP_NUM_THREADS"] == "2"
        assert os.environ["OPENBLAS_NUM_THREADS"] == "2"
