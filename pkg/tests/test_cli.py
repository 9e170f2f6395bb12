import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lop.classifier import LocalProjectionClassifier, load_model
from lop.cli import main

from conftest import gaussian_classes


def write_table(path, X, labels, names=None):
    names = names or [f"f{j}" for j in range(X.shape[1])]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*names, "class"])
        for row, lab in zip(X, labels):
            w.writerow([*(repr(float(v)) for v in row), lab])
    return path


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(21)
    X, y = gaussian_classes(rng, (14, 12, 13), 8, shift=3.0)
    names = np.array(["setosa", "virginica", "other"])[y - 1]
    train = write_table(d / "train.csv", X, names)
    Q = rng.standard_normal((15, 8)) * 2
    # feature columns in a different order than in training
    perm = np.arange(8)[::-1]
    new = d / "new.csv"
    with new.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in perm])
        w.writerows([[repr(float(v)) for v in row[perm]] for row in Q])
    return {"dir": d, "train": train, "new": new, "X": X, "y": y, "Q": Q}


def run(*argv):
    return main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fit_and_predict_roundtrip(data, tmp_path):
    model = tmp_path / "m.json"
    assert run("fit", "--train", data["train"], "--label", "class", "--k", 3, "--out", model) == 0
    assert run("predict", "--model", model, "--data", data["new"], "--out", tmp_path / "p.csv") == 0
    rows = read_rows(tmp_path / "p.csv")
    assert list(rows[0]) == ["row", "label", "p_1", "p_2", "p_3"]
    P = np.array([[float(r[f"p_{g}"]) for g in (1, 2, 3)] for r in rows])
    ref = LocalProjectionClassifier(k=3).fit(data["X"], data["y"])
    np.testing.assert_allclose(P, ref.predict_proba(data["Q"]), atol=1e-12, rtol=0)
    names = np.array(["setosa", "virginica", "other"])
    assert [r["label"] for r in rows] == names[ref.predict(data["Q"]) - 1].tolist()


def test_saved_model_predicts_bitwise(data, tmp_path):
    model = tmp_path / "m.json"
    run("fit", "--train", data["train"], "--label", "class", "--k", 2, "--out", model)
    clf, feature_names = load_model(model)
    assert feature_names == [f"f{j}" for j in range(8)]
    ref = LocalProjectionClassifier(k=2).fit(data["X"], data["y"])
    assert np.array_equal(clf.predict_proba(data["Q"]), ref.predict_proba(data["Q"]))
    assert json.loads(model.read_text())["format"] == "lop-model"


def test_tune_writes_report(data, tmp_path):
    assert run("tune", "--train", data["train"], "--label", "class",
               "--out", tmp_path / "m.json", "--report", tmp_path / "r.csv") == 0
    rows = read_rows(tmp_path / "r.csv")
    assert [int(r["k"]) for r in rows] == list(range(2, 10))
    errors = [float(r["error"]) for r in rows]
    clf, _ = load_model(tmp_path / "m.json")
    assert clf.k_ == 2 + int(np.argmin(errors))


def test_threads_agree(data, tmp_path):
    for t in (1, 8):
        assert run("--threads", t, "fit", "--train", data["train"], "--label", "class",
                   "--k", 3, "--out", tmp_path / f"m{t}.json") == 0
    a, _ = load_model(tmp_path / "m1.json")
    b, _ = load_model(tmp_path / "m8.json")
    np.testing.assert_allclose(a.predict_proba(data["Q"]), b.predict_proba(data["Q"]), atol=1e-12, rtol=0)
    assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m8.json").read_bytes()


def test_usage_errors(data, tmp_path, capsys):
    assert run("fit", "--train", data["train"], "--label", "class", "--k", 2, "--auto-k",
               "--out", tmp_path / "m.json") == 1
    assert "mutually exclusive" in capsys.readouterr().err
    assert run("fit", "--train", data["train"]) == 1
    assert run("nonsense") == 1
    assert run("fit", "--bogus-flag") == 1
    assert run("plot", "--posteriors", "x.csv", "--pair", "1,2", "--matrix", "--out", "o.svg") == 1
    assert not (tmp_path / "m.json").exists()


def test_data_errors(data, tmp_path, capsys):
    assert run("fit", "--train", tmp_path / "missing.csv", "--label", "class", "--out", tmp_path / "m") == 2
    assert "error" in capsys.readouterr().err
    assert run("fit", "--train", data["train"], "--label", "nope", "--out", tmp_path / "m") == 2
    assert run("fit", "--train", data["train"], "--label", "class", "--k", 40, "--out", tmp_path / "m") == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("f0\n1.0\n")
    run("fit", "--train", data["train"], "--label", "class", "--k", 2, "--out", tmp_path / "m.json")
    assert run("predict", "--model", tmp_path / "m.json", "--data", bad, "--out", tmp_path / "p.csv") == 2


def eval_config(data, tmp_path, reps=2):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(f"dataset: {data['train']}\nlabel_column: class\nfraction: 0.75\n"
                   f"repetitions: {reps}\nseed: 4\ndump_posteriors: true\n")
    return cfg


def test_eval_then_plot(data, tmp_path):
    cfg = eval_config(data, tmp_path)
    out = tmp_path / "run"
    assert run("eval", "--config", cfg, "--out-dir", out) == 0
    results = read_rows(out / "results.csv")
    assert len(results) == 6 and {r["status"] for r in results} == {"ok"}
    assert [r["name"] for r in read_rows(out / "classes.csv")] == ["setosa", "virginica", "other"]
    summary = read_rows(out / "summary.csv")
    assert [s["method"] for s in summary] == ["lp", "lda", "knn"]
    dump = out / "posteriors_rep001.csv"
    assert run("plot", "--posteriors", dump, "--pair", "1,2", "--out", tmp_path / "t.svg") == 0
    svg = (tmp_path / "t.svg").read_text()
    assert svg.startswith("<?xml") and "setosa" in svg and "uncertain" not in svg
    assert run("plot", "--posteriors", dump, "--matrix", "--role", "test", "--out", tmp_path / "m.svg") == 0
    assert (tmp_path / "m.svg").read_text().count('class="cell-') == 3


def test_eval_byte_identical(data, tmp_path):
    cfg = eval_config(data, tmp_path)
    run("eval", "--config", cfg, "--out-dir", tmp_path / "a", "--methods", "lda,knn")
    run("--threads", 4, "eval", "--config", cfg, "--out-dir", tmp_path / "b", "--methods", "lda,knn")
    for name in ("results.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_eval_overrides(data, tmp_path):
    cfg = eval_config(data, tmp_path)
    assert run("eval", "--config", cfg, "--out-dir", tmp_path / "o", "--repetitions", 1, "--methods", "knn") == 0
    assert len(read_rows(tmp_path / "o" / "results.csv")) == 1
    assert run("eval", "--config", cfg) == 1


def test_plot_bad_pair(data, tmp_path):
    dump = tmp_path / "d.csv"
    dump.write_text("row_index,true_class,p_1,p_2,p_3,role\n0,a,0.2,0.3,0.5,train\n")
    assert run("plot", "--posteriors", dump, "--pair", "1-2", "--out", tmp_path / "x.svg") == 1
    assert run("plot", "--posteriors", dump, "--pair", "1,1", "--class-names", "a,b,c",
               "--out", tmp_path / "x.svg") == 2
    assert run("plot", "--posteriors", dump, "--pair", "1,2", "--class-names", "a,b",
               "--out", tmp_path / "x.svg") == 2


def test_console_entry_point(data, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lop.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("lop ")
    proc = subprocess.run([sys.executable, "-m", "lop.cli", "fit"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr


def test_tune_denominator_flag(data, tmp_path):
    run("tune", "--train", data["train"], "--label", "class",
        "--out", tmp_path / "a.json", "--report", tmp_path / "a.csv")
    run("tune", "--train", data["train"], "--label", "class", "--denominator", "n-k",
        "--out", tmp_path / "b.json", "--report", tmp_path / "b.csv")
    for ra, rb in zip(read_rows(tmp_path / "a.csv"), read_rows(tmp_path / "b.csv")):
        k = int(ra["k"])
        assert float(rb["error"]) == pytest.approx(float(ra["error"]) * 39 / (39 - k), abs=1e-15)
