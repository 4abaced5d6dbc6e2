import csv
import json
import subprocess
from pathlib import Path

import numpy as np
import pytest


def run_flare(*argv):
    """Invoke the aggregation pipeline CLI (the harness's only upstream)."""
    proc = subprocess.run(["flare", *map(str, argv)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def build_corpus(root: Path, profile: dict) -> dict:
    root.mkdir(parents=True, exist_ok=True)
    profile_path = root / "profile.json"
    profile_path.write_text(json.dumps(profile))
    run_flare("synth", "--profile", profile_path,
              "--out-csv", root / "packets.csv", "--out-truth", root / "truth.csv")
    config = {
        "input": str(root / "packets.csv"),
        "format": "csv",
        "truth": str(root / "truth.csv"),
        "outdir": str(root / "out"),
        "seed": profile["seed"],
    }
    (root / "config.json").write_text(json.dumps(config))
    run_flare("run", "--config", root / "config.json")
    return {
        "packets": root / "packets.csv",
        "truth": root / "truth.csv",
        "aggregated": root / "out" / "aggregated.csv",
    }


@pytest.fixture(scope="session")
def shallow_corpus(tmp_path_factory):
    """Long benign capture with four executions of each flood type; attack
    executions run tens of seconds so window boundaries stay a small
    fraction of each class."""
    kinds = [("tcp_syn", 80.0, 50.0), ("udp", 120.0, 50.0),
             ("xmas", 160.0, 45.0), ("http", 70.0, 55.0)]
    n_attacks, duration = 16, 1500.0
    slot = duration / (n_attacks + 1)
    attacks = []
    for i in range(n_attacks):
        kind, rate, length = kinds[i % 4]
        attacks.append(dict(type=kind, target=i % 3, start_s=round(slot * (i + 0.5), 3),
                            length_s=length, rate=rate))
    profile = dict(device_count=3, benign_rate=12.0, duration_s=duration, seed=31,
                   attacks=attacks)
    return build_corpus(tmp_path_factory.mktemp("shallow"), profile)


@pytest.fixture(scope="session")
def compare_corpus(tmp_path_factory):
    """UDP-heavy capture whose raw per-packet rows blur into the benign
    media streams, for the aggregated-vs-raw sequence-model comparison."""
    attacks = [dict(type="udp", target=(s // 120) % 2, start_s=float(s), length_s=10.0,
                    rate=60.0)
               for s in (40, 160, 280, 400, 520, 640, 760, 880)]
    attacks += [
        dict(type="tcp_syn", target=0, start_s=100.0, length_s=6.0, rate=200.0),
        dict(type="tcp_syn", target=1, start_s=460.0, length_s=6.0, rate=200.0),
        dict(type="xmas", target=0, start_s=820.0, length_s=6.0, rate=220.0),
        dict(type="http", target=1, start_s=1000.0, length_s=6.0, rate=150.0),
        dict(type="udp", target=0, start_s=1060.0, length_s=10.0, rate=60.0),
        dict(type="udp", target=1, start_s=1140.0, length_s=10.0, rate=60.0),
    ]
    profile = dict(device_count=2, benign_rate=12.0, duration_s=1200.0, seed=55,
                   attacks=attacks)
    return build_corpus(tmp_path_factory.mktemp("compare"), profile)


def write_toy_aggregated(path, X, y_binary, y_multi, feature_names=None):
    """Minimal file in the aggregated-CSV shape for harness unit tests."""
    names = feature_names or [f"f{i}" for i in range(len(X[0]))]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["label_binary", "label_multi"])
        for row, yb, ym in zip(X, y_binary, y_multi):
            writer.writerow([f"{v:.6f}" for v in row] + [yb, ym])
    return path


def separable_blobs(n_per_class=80, seed=0):
    rng = np.random.default_rng(seed)
    benign = rng.normal((0.0, 0.0), 0.4, size=(n_per_class, 2))
    attack = rng.normal((6.0, 6.0), 0.4, size=(n_per_class, 2))
    X = np.vstack([benign, attack])
    y = np.array(["Benign"] * n_per_class + ["Attack"] * n_per_class)
    return X, y
