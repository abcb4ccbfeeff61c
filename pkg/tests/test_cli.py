import csv
import json

import numpy as np
import pytest

from agmkit.cli import main
from agmkit.data import load_csv, save_csv
from agmkit.model_io import load_model
from agmkit.synth import make_gaussian_dataset

FAST_FLAGS = [
    "--base-models", "random-forest-6",
    "--probe-model", "random-forest-6",
    "--val-model", "random-forest-6",
    "--max-layers", "2",
    "--max-width", "2",
]


@pytest.fixture()
def train_csv(tmp_path):
    ds = make_gaussian_dataset([30, 30], 4, 3.5, 13, class_names=["no", "yes"])
    path = tmp_path / "train.csv"
    save_csv(ds, path, "outcome")
    return str(path)


def run(argv):
    return main(argv)


class TestTrain:
    def test_creates_model(self, train_csv, tmp_path):
        out = str(tmp_path / "m.agm")
        code = run(["train", "--data", train_csv, "--label", "outcome",
                    "--version", "v3", "--seed", "7", "--out", out, *FAST_FLAGS])
        assert code == 0
        model = load_model(out)
        assert model.config.version == "v3"
        assert model.config.seed == 7

    def test_missing_label_is_usage_error(self, train_csv, tmp_path, capsys):
        code = run(["train", "--data", train_csv,
                    "--out", str(tmp_path / "m.agm")])
        assert code == 1
        assert "--label" in capsys.readouterr().err

    def test_v1_width_flag_honored(self, train_csv, tmp_path):
        out = str(tmp_path / "m.agm")
        code = run(["train", "--data", train_csv, "--label", "outcome",
                    "--version", "v1", "--width", "4", "--seed", "1",
                    "--out", out,
                    "--base-models", "random-forest-6",
                    "--max-layers", "2", "--max-width", "8"])
        assert code == 0
        model = load_model(out)
        assert all(w == 4 for w in model.layer_widths)

    def test_missing_data_file(self, tmp_path):
        code = run(["train", "--data", str(tmp_path / "ghost.csv"),
                    "--label", "y", "--out", str(tmp_path / "m.agm")])
        assert code == 2

    def test_bad_flag_value_is_usage_error(self, train_csv, tmp_path):
        code = run(["train", "--data", train_csv, "--label", "outcome",
                    "--patience", "0", "--out", str(tmp_path / "m.agm")])
        assert code == 1

    def test_unknown_flag_rejected(self, train_csv, tmp_path):
        code = run(["train", "--data", train_csv, "--label", "outcome",
                    "--out", str(tmp_path / "m.agm"), "--frobnicate", "3"])
        assert code == 1


@pytest.fixture()
def trained(train_csv, tmp_path):
    out = str(tmp_path / "model.agm")
    code = run(["train", "--data", train_csv, "--label", "outcome",
                "--version", "v1", "--width", "1", "--seed", "3", "--out", out,
                "--base-models", "random-forest-6", "--max-layers", "1"])
    assert code == 0
    return out


class TestPredict:
    def test_degenerate_vote_matches_single_model(self, trained, train_csv, tmp_path):
        # one layer, one model: cascade output equals that model's own vote
        model = load_model(trained)
        assert model.n_layers == 1 and model.layer_widths == (1,)
        out = str(tmp_path / "pred.csv")
        code = run(["predict", "--model", trained, "--data", train_csv,
                    "--label", "outcome", "--out", out])
        assert code == 0
        ds = load_csv(train_csv, "outcome")
        inner = model.layers[0].models[0]
        expected = [model.class_names[i] for i in inner.predict(ds.features)]
        with open(out) as fh:
            got = [row["prediction"] for row in csv.DictReader(fh)]
        assert got == expected

    def test_proba_columns_sum_to_one(self, trained, train_csv, tmp_path):
        out = str(tmp_path / "pred.csv")
        code = run(["predict", "--model", trained, "--data", train_csv,
                    "--label", "outcome", "--out", out, "--proba"])
        assert code == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert set(rows[0]) == {"prediction", "proba_no", "proba_yes"}
        for row in rows:
            total = float(row["proba_no"]) + float(row["proba_yes"])
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_corrupt_model_is_data_error(self, trained, train_csv, tmp_path):
        bad = tmp_path / "bad.agm"
        bad.write_bytes(open(trained, "rb").read()[:64])
        code = run(["predict", "--model", str(bad), "--data", train_csv,
                    "--label", "outcome", "--out", str(tmp_path / "p.csv")])
        assert code == 2

    def test_width_mismatch_names_counts(self, trained, tmp_path, capsys):
        wide = tmp_path / "wide.csv"
        wide.write_text("a,b,c,d,e,f\n1,2,3,4,5,6\n")
        code = run(["predict", "--model", trained, "--data", str(wide),
                    "--out", str(tmp_path / "p.csv")])
        assert code == 2
        err = capsys.readouterr().err
        assert "6" in err and "4" in err

    def test_feature_only_csv(self, trained, train_csv, tmp_path):
        ds = load_csv(train_csv, "outcome")
        feats = tmp_path / "features.csv"
        with open(feats, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ds.feature_names)
            for row in ds.features:
                writer.writerow([repr(float(v)) for v in row])
        code = run(["predict", "--model", trained, "--data", str(feats),
                    "--out", str(tmp_path / "p.csv")])
        assert code == 0


class TestEval:
    def test_perfect_on_pure_training_set(self, tmp_path):
        ds = make_gaussian_dataset([25, 25], 3, 12.0, 4, class_names=["a", "b"])
        data = tmp_path / "easy.csv"
        save_csv(ds, data, "y")
        model_path = str(tmp_path / "m.agm")
        assert run(["train", "--data", str(data), "--label", "y",
                    "--version", "v1", "--width", "1", "--seed", "0",
                    "--out", model_path, "--base-models", "random-forest-10",
                    "--max-layers", "1"]) == 0
        metrics = tmp_path / "metrics.json"
        code = run(["eval", "--model", model_path, "--data", str(data),
                    "--label", "y", "--out", str(metrics)])
        assert code == 0
        payload = json.loads(metrics.read_text())
        assert payload["accuracy"] == 1.0
        confusion = np.asarray(payload["confusion"])
        assert confusion.sum() == 50
        assert np.trace(confusion) == 50

    def test_accuracy_matches_recount_oracle(self, trained, train_csv, tmp_path):
        pred_csv = tmp_path / "pred.csv"
        assert run(["predict", "--model", trained, "--data", train_csv,
                    "--label", "outcome", "--out", str(pred_csv)]) == 0
        metrics = tmp_path / "metrics.json"
        assert run(["eval", "--model", trained, "--data", train_csv,
                    "--label", "outcome", "--out", str(metrics)]) == 0
        # independent recount over the prediction file
        ds = load_csv(train_csv, "outcome")
        truth = [ds.class_names[i] for i in ds.labels]
        with open(pred_csv) as fh:
            predicted = [row["prediction"] for row in csv.DictReader(fh)]
        recount = sum(t == p for t, p in zip(truth, predicted)) / len(truth)
        assert json.loads(metrics.read_text())["accuracy"] == recount

    def test_empty_dataset_is_data_error(self, trained, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        code = run(["eval", "--model", trained, "--data", str(empty),
                    "--label", "outcome"])
        assert code == 2


class TestSplit:
    def test_writes_partition(self, train_csv, tmp_path):
        tr, ho = str(tmp_path / "tr.csv"), str(tmp_path / "ho.csv")
        code = run(["split", "--data", train_csv, "--label", "outcome",
                    "--fraction", "0.2", "--seed", "5",
                    "--train-out", tr, "--holdout-out", ho])
        assert code == 0
        a = load_csv(tr, "outcome")
        b = load_csv(ho, "outcome")
        assert a.n_samples + b.n_samples == 60
        assert b.n_samples == 12

    def test_deterministic(self, train_csv, tmp_path):
        outs = []
        for tag in ("x", "y"):
            tr = tmp_path / f"tr_{tag}.csv"
            ho = tmp_path / f"ho_{tag}.csv"
            assert run(["split", "--data", train_csv, "--label", "outcome",
                        "--seed", "5", "--train-out", str(tr),
                        "--holdout-out", str(ho)]) == 0
            outs.append((tr.read_text(), ho.read_text()))
        assert outs[0] == outs[1]


class TestBench:
    def test_spec_runs_and_formats(self, train_csv, tmp_path):
        spec = {
            "seeds": [0, 1],
            "datasets": [{"name": "tiny", "path": train_csv, "label": "outcome"}],
            "methods": [
                {"id": "agm_v1",
                 "overrides": {"base_model_set": ["random-forest-6"],
                               "fixed_width": 1, "max_layers": 2}},
                {"id": "random_forest_1000", "overrides": {"n_trees": 6}},
            ],
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        md = tmp_path / "report.md"
        assert run(["bench", "--spec", str(spec_path), "--out", str(md)]) == 0
        assert md.read_text().startswith("| Dataset |")

        c1 = tmp_path / "r1.csv"
        c2 = tmp_path / "r2.csv"
        assert run(["bench", "--spec", str(spec_path), "--out", str(c1),
                    "--format", "csv"]) == 0
        assert run(["bench", "--spec", str(spec_path), "--out", str(c2),
                    "--format", "csv"]) == 0
        assert c1.read_bytes() == c2.read_bytes()
        rows = list(csv.DictReader(open(c1)))
        assert len(rows) == 4

    def test_strict_missing_dataset(self, train_csv, tmp_path):
        spec = {
            "seeds": [0],
            "datasets": [
                {"name": "ghost", "path": str(tmp_path / "ghost.csv")},
                {"name": "tiny", "path": train_csv, "label": "outcome"},
            ],
            "methods": [{"id": "random_forest_1000", "overrides": {"n_trees": 5}}],
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        out = tmp_path / "r.md"
        assert run(["bench", "--spec", str(spec_path), "--out", str(out)]) == 0
        assert run(["bench", "--spec", str(spec_path), "--out", str(out),
                    "--strict"]) == 2

    def test_data_dir_env(self, train_csv, tmp_path, monkeypatch):
        import os, shutil
        datadir = tmp_path / "datahome"
        datadir.mkdir()
        shutil.copy(train_csv, datadir / "rel.csv")
        spec = {
            "seeds": [0],
            "datasets": [{"name": "tiny", "path": "rel.csv", "label": "outcome"}],
            "methods": [{"id": "random_forest_1000", "overrides": {"n_trees": 5}}],
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        monkeypatch.setenv("AGMKIT_DATA_DIR", str(datadir))
        out = tmp_path / "r.md"
        assert run(["bench", "--spec", str(spec_path), "--out", str(out)]) == 0


class TestTopLevel:
    def test_no_command_prints_help(self, capsys):
        assert run([]) == 1

    def test_unknown_command(self):
        assert run(["frob"]) == 1

    def test_help_exits_zero(self):
        assert run(["--help"]) == 0
