import csv
import filecmp
import json
import os
import subprocess
import sys

import pytest

from xmodal.cli import run_command
from xmodal.data import SyntheticConfig, write_jsonl
from xmodal.data.synthetic import generate_examples

BASE = {"variant": "lstm", "stream_widths": {"joint": [3, 4, 4]}, "head_widths": [4, 1]}
FULL = {"variant": "lstm", "stream_widths": {"joint": [21, 42, 84]}, "head_widths": [128, 64, 1]}
RUN = {
    "seed": 3,
    "data": {"synthetic": {"n_users": 60, "T_range": [10, 11]}},
    "archs": {
        "lstm": {"spec": BASE},
        "xlstm_b": {"allocate": {"baseline": BASE, "scores": "0.8062,0.8017,0.7418", "k": 30, "strategy": "B"}},
    },
    "arch": {"spec": BASE},
    "train": {"epochs": 2, "batch_size": 32},
    "eval": {"k_folds": 3},
    "model": "out/model.json",
    "dream": {"targets": ["success", "failure"], "max_iters": 30},
    "report": {"inputs": ["out"]},
}


def write_config(d, cfg=RUN, name="run.json"):
    path = d / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run_all(d, workers="2"):
    cfg = write_config(d)
    out = str(d / "out")
    for cmd in ("generate", "allocate", "train", "crossval", "dream", "report"):
        argv = [cmd, "--config", cfg, "--out", out]
        if cmd == "crossval":
            argv += ["--workers", workers]
        if cmd == "allocate":
            argv += ["--scores", "0.8062,0.8017,0.7418", "--k", "30", "--baseline", str(d / "base.json")]
        assert run_command(argv) == 0, cmd
    return d / "out"


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    dirs = []
    for name, workers in (("a", "1"), ("b", "2")):
        d = tmp_path_factory.mktemp(name)
        (d / "base.json").write_text(json.dumps(FULL))
        dirs.append(run_all(d, workers))
    return dirs


def test_every_subcommand_writes_its_artifacts(runs):
    names = set(os.listdir(runs[0]))
    expected = {
        "dataset.jsonl", "allocation.json", "model.json", "history.csv", "folds_lstm.json", "roc_lstm_fold0.csv",
        "roc_lstm_mean.csv", "histogram_lstm.csv", "roc.svg", "ttests.json", "summary.json", "metrics.csv",
        "metrics.md", "dream_success.csv", "dream_failure.csv", "dream_success_trace.json", "dream_weight.svg",
        "report.csv", "report.md",
    }
    assert expected <= names


def test_reruns_are_byte_identical(runs):
    a, b = runs
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []


def test_metrics_table_rows(runs):
    with open(runs[0] / "metrics.csv") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    assert rows[0] == ["Metric", "lstm", "xlstm_b"]
    assert [r[0] for r in rows[1:]] == ["Accuracy", "Precision", "Recall", "F1", "MCC", "ROC AUC", "p-value"]
    assert rows[-1][1] == "" and 0.0 <= float(rows[-1][2]) <= 1.0
    assert "| ROC AUC |" in (runs[0] / "metrics.md").read_text()
    assert "p-value" in (runs[0] / "report.md").read_text()


def test_artifacts_carry_provenance(runs):
    out = runs[0]
    for name in os.listdir(out):
        text = (out / name).read_text()
        if name.endswith(".json"):
            prov = json.loads(text)["provenance"]
        elif name.endswith(".jsonl"):
            prov = json.loads(text.split("\n", 1)[0])["_provenance"]
        elif name.endswith(".csv"):
            assert text.startswith("# provenance: ")
            prov = json.loads(text.split("\n", 1)[0][len("# provenance: "):])
        else:
            assert "<!-- provenance: " in text
            continue
        assert prov["seed"] == 3 and prov["tool"] == "xmodal"
        assert prov["config"]["train"]["seed"] == 3
        assert "output_dir" not in prov["config"]


def test_allocation_is_within_budget(runs):
    alloc = json.loads((runs[0] / "allocation.json").read_text())
    acc = alloc["accounting"]
    assert abs(acc["achieved_params"] - acc["budget"]) / acc["budget"] <= 0.02
    assert alloc["variant"] == "xlstm_b"


def test_seed_flag_changes_the_data(tmp_path):
    cfg = write_config(tmp_path)
    for seed, out in (("7", "x"), ("7", "y"), ("8", "z")):
        assert run_command(["generate", "--config", cfg, "--seed", seed, "--out", str(tmp_path / out)]) == 0
    read = lambda o: (tmp_path / o / "dataset.jsonl").read_bytes()  # noqa: E731
    assert read("x") == read("y") != read("z")


@pytest.mark.parametrize("argv", [
    ["frobnicate"], [], ["generate", "--bogus"], ["allocate", "--strategy", "Q"],
])
def test_usage_errors_exit_one(argv, capsys):
    assert run_command(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_invalid_inputs_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_command(["train", "--config", str(bad)]) == 1
    assert run_command(["train", "--config", str(tmp_path / "missing.json")]) == 1
    assert run_command(["allocate", "--scores", "0.8,abc,0.7", "--k", "30", "--out", str(tmp_path)]) == 1
    both = {**RUN, "data": {"synthetic": {}, "jsonl": "x.jsonl"}}
    assert run_command(["crossval", "--config", write_config(tmp_path, both, "both.json"), "--workers", "1"]) == 1
    bad_train = {**RUN, "train": {"epochs": 0}}
    assert run_command(["train", "--config", write_config(tmp_path, bad_train, "t.json")]) == 1
    err = capsys.readouterr().err
    assert "[train]" in err and "[data]" in err


def test_single_class_data_exits_one(tmp_path):
    examples = generate_examples(SyntheticConfig(n_users=20, T_range=(10, 10), seed=1))
    for e in examples:
        e.label = True
    write_jsonl(examples, tmp_path / "one.jsonl")
    cfg = {**RUN, "data": {"jsonl": "one.jsonl"}, "eval": {"k_folds": 2}}
    path = write_config(tmp_path, cfg, "one.json")
    assert run_command(["crossval", "--config", path, "--workers", "1", "--out", str(tmp_path / "o")]) == 1


def test_log_level_must_be_known(monkeypatch):
    monkeypatch.setenv("XMODAL_LOG", "chatty")
    assert run_command(["generate"]) == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_failure_exits_two(tmp_path):
    # a huge learning rate blows the weights up within a few epochs
    cfg = {**RUN, "train": {"epochs": 3, "batch_size": 32, "adam": {"lr": 1e308}}}
    path = write_config(tmp_path, cfg, "inf.json")
    assert run_command(["train", "--config", path, "--out", str(tmp_path / "o")]) == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "xmodal.cli", "report", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "report.inputs" in proc.stderr
