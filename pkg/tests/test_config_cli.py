import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dataset_fakes import write_dsads
from gbmcal import ConfigError
from gbmcal.calibrate import stratified_split
from gbmcal.cli import main
from gbmcal.config import load_config
from gbmcal.features import read_feature_csv, write_feature_csv
from gbmcal.gbm import load_model, serialize_estimators

QUICK = ["--set", "synth.subjects=1,2,3", "--set", "synth.segments_per_class=3", "--set", "train.n_rounds=10"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None, env={})
        assert cfg.dataset == "synth"
        assert cfg.calibrate.learning_rate == 1.0
        assert cfg.train.n_rounds == 100
        assert cfg.synth.subjects == (1, 2, 3, 4, 5, 6)

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[run]\nseed = 4\n[train]\nn_rounds = 7\n[calibrate]\nbatch_size = 8\n"
                        "[ingest]\nactivity_map = Walk:a09, Run:a12\nsubjects = 1, 2\n")
        cfg = load_config(path, [("train.n_rounds", "9")], env={})
        assert cfg.seed == 4 and cfg.train.seed == 4 and cfg.calibrate.seed == 4
        assert cfg.train.n_rounds == 9
        assert cfg.calibrate.batch_size == 8
        assert cfg.ingest.activity_map == {"Walk": "a09", "Run": "a12"}
        assert cfg.ingest.subjects == (1, 2)

    def test_env_root(self, tmp_path):
        cfg = load_config(None, [("run.dataset", "dsads")], env={"GBMCAL_DATA_ROOT": str(tmp_path)})
        assert cfg.ingest.root == str(tmp_path)

    @pytest.mark.parametrize("override", [("train.bogus", "1"), ("nosection.x", "1"), ("train.n_rounds", "many"),
                                          ("train.n_rounds", "0"), ("run.dataset", "mnist"), ("train.seed", "3")])
    def test_rejects(self, override):
        with pytest.raises(ConfigError):
            load_config(None, [override], env={})

    def test_dataset_needs_root(self):
        with pytest.raises(ConfigError, match="root"):
            load_config(None, [("run.dataset", "pamap2")], env={})

    def test_hash_ignores_output_dir(self):
        a = load_config(None, [("run.output_dir", "x")], env={})
        b = load_config(None, [("run.output_dir", "y")], env={})
        c = load_config(None, [("train.n_rounds", "5")], env={})
        assert a.hash() == b.hash() != c.hash()

    def test_sample_configs_load(self, tmp_path):
        from pathlib import Path

        for path in sorted((Path(__file__).parents[1] / "configs").glob("*.ini")):
            load_config(path, env={"GBMCAL_DATA_ROOT": str(tmp_path)})


class TestFeaturesCommand:
    def test_counts_and_determinism(self, capsys, tmp_path):
        for name in ("a", "b"):
            code, out, _ = run(capsys, "features", *QUICK, "-o", tmp_path / name)
            assert code == 0 and "instances" in out
        a, b = (tmp_path / n / "features.csv" for n in ("a", "b"))
        assert a.read_bytes() == b.read_bytes()
        man = json.loads((tmp_path / "a" / "manifest.json").read_text())
        other = json.loads((tmp_path / "b" / "manifest.json").read_text())
        assert man["config_hash"] == other["config_hash"]
        assert man["counts"] == other["counts"]
        # 3 subjects x 4 classes x 3 segments x 5 one-second windows
        assert man["n_instances"] == 3 * 4 * 3 * 5
        assert man["subjects"] == [1, 2, 3]
        assert man["classes"] == ["Bike", "Rest", "Run", "Walk"]
        assert len(read_feature_csv(a)) == man["n_instances"]

    def test_dsads_tree(self, capsys, tmp_path):
        root = write_dsads(tmp_path / "dsads", segments=1)
        out_dir = tmp_path / "out"
        code, _, err = run(capsys, "features", "--dataset", "dsads", "--root", root, "-o", out_dir)
        assert code == 0, err
        man = json.loads((out_dir / "manifest.json").read_text())
        assert len(man["subjects"]) == 8 and len(man["classes"]) == 4
        code, _, err = run(capsys, "experiment", "--features", out_dir / "features.csv", "-o", out_dir / "cv",
                           "--n-rounds", 5, "--max-epochs", 3, "--repetitions", 1)
        assert code == 0, err
        rows = list(csv.reader(open(out_dir / "cv" / "f1_table.csv")))
        assert len(rows) == 1 + 8 + 1 and rows[-1][0] == "Overall"


@pytest.fixture(scope="module")
def drift_files(tmp_path_factory, drift_features):
    root = tmp_path_factory.mktemp("drift")
    write_feature_csv(drift_features, root / "all.csv")
    user = drift_features.subset(drift_features.subjects == 6)
    tune_idx, held_idx = stratified_split(user.label_indices(user.class_names()), 0.5,
                                          np.random.default_rng(0))
    write_feature_csv(user.subset(tune_idx), root / "user.csv")
    return root, user.subset(held_idx)


class TestTrainAndCalibrate:
    def test_train_then_calibrate(self, capsys, drift_files):
        root, held = drift_files
        code, out, err = run(capsys, "train", "--features", root / "all.csv", "--exclude-subject", 6,
                             "-o", root, "--n-rounds", 30)
        assert code == 0, err
        model = load_model(root / "model.json")
        assert 6 not in model.metadata["subjects"]
        code, out, err = run(capsys, "calibrate", "--model", root / "model.json", "--user-data",
                             root / "user.csv", "-o", root / "cal", "--patience", 0, "--max-epochs", 25)
        assert code == 0, err
        tuned = load_model(root / "cal" / "tuned_model.json")
        assert serialize_estimators(tuned) == serialize_estimators(model)
        history = (root / "cal" / "history.csv").read_text().splitlines()
        assert len(history) == 25 + 1
        y = held.label_indices(model.class_names)
        base_acc = np.mean(model.predict_batch(held.X) == y)
        tuned_acc = np.mean(tuned.predict_batch(held.X) == y)
        assert tuned_acc >= base_acc


class TestExperiment:
    def test_zero_epochs_identical(self, capsys, tmp_path):
        code, out, err = run(capsys, "experiment", *QUICK, "--max-epochs", 0, "--repetitions", 2, "-o", tmp_path)
        assert code == 0, err
        rows = list(csv.DictReader(open(tmp_path / "f1_table.csv")))
        assert len(rows) == 3 + 1
        for r in rows:
            assert r["baseline_f1"] == r["tuned_f1"]
        for r in csv.DictReader(open(tmp_path / "class_accuracy_overall.csv")):
            assert r["baseline_accuracy"] == r["tuned_accuracy"]
        assert "Overall" in out

    def test_report_command(self, capsys, tmp_path):
        run(capsys, "experiment", *QUICK, "--max-epochs", 2, "--repetitions", 1, "-o", tmp_path)
        before = (tmp_path / "f1_table.csv").read_bytes()
        code, out, _ = run(capsys, "report", tmp_path / "report.json", "-o", tmp_path / "again")
        assert code == 0 and "Overall" in out
        assert (tmp_path / "again" / "f1_table.csv").read_bytes() == before


class TestErrors:
    def test_missing_root(self, capsys, tmp_path):
        missing = tmp_path / "nowhere"
        code, _, err = run(capsys, "features", "--dataset", "dsads", "--root", missing, "-o", tmp_path)
        assert code == 2
        doc = json.loads(err.strip().splitlines()[-1])
        assert str(missing) in doc["message"]

    def test_usage(self, capsys):
        code, _, err = run(capsys, "train", "--n-rounds", "lots")
        assert code == 1 and '"usage"' in err
        code, _, _ = run(capsys, "frobnicate")
        assert code == 1

    def test_config_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "train", "--set", "train.depth=3", "-o", tmp_path)
        assert code == 1 and "depth" in err

    def test_corrupt_model(self, capsys, tmp_path):
        (tmp_path / "m.json").write_text("{")
        (tmp_path / "u.csv").write_text("nonsense\n")
        code, _, err = run(capsys, "calibrate", "--model", tmp_path / "m.json", "--user-data", tmp_path / "u.csv")
        assert code == 2

    def test_unknown_user_class(self, capsys, tmp_path, small_features):
        from gbmcal.gbm import TrainConfig, save_model, train

        two = small_features.subset(np.isin(small_features.labels, ["Walk", "Run"]))
        save_model(train(two, TrainConfig(n_rounds=3)), tmp_path / "m.json")
        write_feature_csv(small_features, tmp_path / "u.csv")
        code, _, err = run(capsys, "calibrate", "--model", tmp_path / "m.json", "--user-data", tmp_path / "u.csv",
                           "-o", tmp_path)
        assert code == 2 and "Bike" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gbmcal", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
