import json
import subprocess

import numpy as np

from conftest import separable_blobs, write_toy_aggregated


def run_cli(*argv):
    return subprocess.run(["flare-eval", *map(str, argv)], capture_output=True, text=True)


def test_train_eval_mode(tmp_path):
    X, y = separable_blobs(n_per_class=40, seed=1)
    dataset = write_toy_aggregated(tmp_path / "toy.csv", X, y, y)
    config = tmp_path / "eval.json"
    config.write_text(json.dumps({
        "dataset": str(dataset), "task": "binary", "models": ["rf"],
        "smote": True, "seed": 4,
    }))
    out = tmp_path / "report.json"
    proc = run_cli("--config", config, "--out", out)
    assert proc.returncode == 0, proc.stderr
    report = json.loads(out.read_text())
    entry = report["models"][0]
    assert entry["model"] == "rf"
    assert entry["per_class"]["Attack"]["f1"] == 1.0
    assert entry["train_time_s"] > 0
    # stored confusion matrix reproduces the reported metrics
    cm = np.array(entry["confusion"])
    support = {c: int(cm[i].sum()) for i, c in enumerate(entry["classes"])}
    for cls, stats in entry["per_class"].items():
        assert stats["support"] == support[cls]


def test_bad_config_exits_2(tmp_path):
    config = tmp_path / "eval.json"
    config.write_text(json.dumps({"dataset": "missing.csv", "task": "nope"}))
    proc = run_cli("--config", config, "--out", tmp_path / "r.json")
    assert proc.returncode == 2
