import csv
import json
import subprocess
import sys

import pytest
import yaml

from glcc.cli import main
from glcc.graph import GraphDataset, load_snapshot, save_snapshot, three_family_mixture

FAST = {"epochs": 2, "batch_size": 16, "hidden_dim": 8, "instance_dim": 8, "warmup_epochs": 1, "k_neighbors": 3}


@pytest.fixture
def data(tmp_path):
    ds = three_family_mixture(count=8, seed=0)
    return str(save_snapshot(ds, tmp_path / "mix.npz"))


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(FAST))
    return str(p)


def only_run(root):
    (run,) = [p for p in root.iterdir() if p.is_dir()]
    return run


def test_generate_three_family(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text("preset: three_family\ncount: 100\nseed: 0\n")
    assert main(["generate", "--config", str(spec), "--out", str(tmp_path / "a")]) == 0
    assert main(["generate", "--config", str(spec), "--out", str(tmp_path / "b")]) == 0
    a, b = only_run(tmp_path / "a"), only_run(tmp_path / "b")
    assert a.name == b.name
    ds = load_snapshot(a / "dataset.npz")
    assert len(ds) == 300
    assert (a / "dataset.npz").read_bytes() == (b / "dataset.npz").read_bytes()
    ma, mb = (json.loads((r / "manifest.json").read_text()) for r in (a, b))
    assert ma["artifacts"] == mb["artifacts"]
    assert ma["dataset_fingerprint"] == ds.fingerprint()


def test_generate_family_list(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"families": [{"count": 3, "nodes": [4, 6], "density": 0.5, "feature_mean": [0, 1]}]}))
    assert main(["generate", "--config", str(spec), "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize("text", ["", "families: []\n", "families: [{count: 2, nodes: [3, 4], density: 1.5, feature_mean: [0]}]\n"])
def test_generate_bad_spec(tmp_path, text):
    spec = tmp_path / "spec.yaml"
    spec.write_text(text)
    assert main(["generate", "--config", str(spec), "--out", str(tmp_path)]) == 2


def test_train_artifacts(tmp_path, data, cfg_file):
    out = tmp_path / "runs"
    assert main(["train", "--config", cfg_file, "--data", data, "--out", str(out), "--variant", "M5"]) == 0
    run = only_run(out)
    names = {p.name for p in run.iterdir()}
    assert {"manifest.json", "losses.csv", "assignments.csv", "metrics.json", "checkpoint.pt"} <= names
    rows = list(csv.reader(open(run / "assignments.csv")))
    assert rows[0] == ["graph_index", "cluster_id"] and len(rows) == 25
    header = (run / "losses.csv").read_text().splitlines()[0]
    assert header == "epoch,step,igc,cgc,entropy,sup,total"
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["config"]["num_clusters"] == 3
    assert manifest["seed"] == 0 and manifest["run_id"] in run.name


def test_train_reproducible_from_manifest(tmp_path, data, cfg_file):
    assert main(["train", "--config", cfg_file, "--data", data, "--out", str(tmp_path / "a"), "--seed", "4"]) == 0
    first = only_run(tmp_path / "a")
    manifest = first / "manifest.json"
    assert main(["train", "--config", str(manifest), "--data", data, "--out", str(tmp_path / "b")]) == 0
    second = only_run(tmp_path / "b")
    assert first.name == second.name
    for name in ("losses.csv", "assignments.csv", "metrics.json", "checkpoint.pt"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_train_zero_epochs(tmp_path, data, cfg_file):
    assert main(["train", "--config", cfg_file, "--data", data, "--out", str(tmp_path), "--epochs", "0"]) == 0
    assert (only_run(tmp_path) / "assignments.csv").exists()


def test_train_missing_data(tmp_path, cfg_file):
    assert main(["train", "--config", cfg_file, "--data", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 2


def test_train_bad_config(tmp_path, data):
    p = tmp_path / "bad.yaml"
    p.write_text("learning_rate: -1\n")
    assert main(["train", "--config", str(p), "--data", data, "--out", str(tmp_path)]) == 2
    p.write_text("[1, 2")
    assert main(["train", "--config", str(p), "--data", data, "--out", str(tmp_path)]) == 2


def test_bad_variant_flag(data):
    assert main(["train", "--data", data, "--variant", "M7"]) == 2


def test_training_abort_exit_code(tmp_path, data, cfg_file, monkeypatch):
    import glcc.trainer as tr
    from glcc.errors import NumericalError

    def boom(state, ds, idx, L):
        raise NumericalError("total")

    monkeypatch.setattr(tr, "contrastive_step", boom)
    assert main(["train", "--config", cfg_file, "--data", data, "--out", str(tmp_path)]) == 3
    manifest = json.loads((only_run(tmp_path) / "manifest.json").read_text())
    assert manifest["status"] == "aborted"


def test_output_root_from_environment(tmp_path, data, cfg_file, monkeypatch):
    monkeypatch.setenv("GLCC_OUTPUT_ROOT", str(tmp_path / "envroot"))
    assert main(["train", "--config", cfg_file, "--data", data, "--epochs", "0"]) == 0
    assert only_run(tmp_path / "envroot").name.startswith("train-")


def test_ablate_table(tmp_path, data, cfg_file):
    assert main(["ablate", "--config", cfg_file, "--data", data, "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(only_run(tmp_path) / "ablation.csv")))
    assert [r["variant"] for r in rows] == ["M1", "M2", "M3", "M4", "M5"]
    assert list(rows[0]) == ["variant", "nmi", "acc", "ari"]


def test_ablate_filter(tmp_path, data, cfg_file):
    assert main(["ablate", "--config", cfg_file, "--data", data, "--out", str(tmp_path), "--only", "M3"]) == 0
    rows = list(csv.DictReader(open(only_run(tmp_path) / "ablation.csv")))
    assert len(rows) == 1 and rows[0]["variant"] == "M3"


def test_sweep_k(tmp_path, data, cfg_file):
    args = ["sweep-k", "--config", cfg_file, "--data", data, "--out", str(tmp_path), "--epochs", "1", "--k-values", "1", "2"]
    assert main(args) == 0
    lines = (only_run(tmp_path) / "sweep_k.csv").read_text().splitlines()
    assert lines[0] == "k,nmi,acc,ari" and len(lines) == 3


def test_eval_matches_training_report(tmp_path, data, cfg_file, capsys):
    assert main(["train", "--config", cfg_file, "--data", data, "--out", str(tmp_path)]) == 0
    run = only_run(tmp_path)
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(run / "checkpoint.pt"), "--data", data]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads((run / "metrics.json").read_text())


def test_eval_unlabelled(tmp_path, data, cfg_file, capsys):
    assert main(["train", "--config", cfg_file, "--data", data, "--out", str(tmp_path / "r")]) == 0
    ckpt = only_run(tmp_path / "r") / "checkpoint.pt"
    ds = load_snapshot(data)
    bare = GraphDataset([g.__class__(g.node_count, g.edges, g.node_features, None) for g in ds.graphs], 0)
    path = save_snapshot(bare, tmp_path / "bare.npz")
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(ckpt), "--data", str(path), "--out", str(tmp_path / "e")]) == 0
    assert capsys.readouterr().out == ""
    assert (tmp_path / "e" / "assignments.csv").exists()


def test_eval_incompatible_k(tmp_path, data, cfg_file):
    assert main(["train", "--config", cfg_file, "--data", data, "--out", str(tmp_path), "--epochs", "0"]) == 0
    ckpt = only_run(tmp_path) / "checkpoint.pt"
    ds = load_snapshot(data)
    two = GraphDataset([g for g in ds.graphs if g.label < 2], 2)
    path = save_snapshot(two, tmp_path / "two.npz")
    assert main(["eval", "--checkpoint", str(ckpt), "--data", str(path)]) == 2


def test_eval_corrupt_checkpoint(tmp_path, data):
    bad = tmp_path / "bad.pt"
    bad.write_bytes(b"not a checkpoint")
    assert main(["eval", "--checkpoint", str(bad), "--data", data]) == 2


def test_inputs_not_mutated(tmp_path, data, cfg_file):
    before = (open(data, "rb").read(), open(cfg_file).read())
    main(["train", "--config", cfg_file, "--data", data, "--out", str(tmp_path)])
    assert before == (open(data, "rb").read(), open(cfg_file).read())


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "glcc", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ablate" in proc.stdout
