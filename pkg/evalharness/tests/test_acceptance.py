"""Acceptance suite for the evaluation harness: checks the release
criteria on synthetic corpora produced by the aggregation pipeline's own
CLI, printing one PASS/FAIL line per criterion."""

import sys
from contextlib import contextmanager

from flare_eval.harness import EvalConfig, compare_flare, train_eval


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPT {name}: FAIL", file=sys.__stdout__, flush=True)
        raise
    print(f"ACCEPT {name}: PASS", file=sys.__stdout__, flush=True)


def f1(entry, cls):
    return entry["per_class"][cls]["f1"]


def test_shallow_models_on_flare_dataset(shallow_corpus):
    with criterion(
        "shallow models (RF/FFNN, 10-fold CV, SMOTE: binary attack F1>=0.95, "
        "benign>=0.99; multi UDP/XMas F1>=0.90)"
    ):
        dataset = str(shallow_corpus["aggregated"])
        binary = train_eval(
            EvalConfig(dataset=dataset, task="binary", models=["rf", "ffnn"],
                       smote=True, seed=7, cv=True, folds=10, epochs=40)
        )
        for entry in binary["models"]:
            name = entry["model"]
            assert f1(entry, "Attack") >= 0.95, f"{name} attack F1 {f1(entry, 'Attack'):.4f}"
            assert f1(entry, "Benign") >= 0.99, f"{name} benign F1 {f1(entry, 'Benign'):.4f}"

        multi = train_eval(
            EvalConfig(dataset=dataset, task="multi", models=["rf", "ffnn"],
                       smote=True, seed=7, cv=True, folds=10, epochs=50)
        )
        for entry in multi["models"]:
            name = entry["model"]
            assert f1(entry, "UDP Flood") >= 0.90, f"{name} UDP F1 {f1(entry, 'UDP Flood'):.4f}"
            assert f1(entry, "XMas Tree Flood") >= 0.90, \
                f"{name} XMas F1 {f1(entry, 'XMas Tree Flood'):.4f}"


def test_aggregation_vs_raw_lstm(compare_corpus):
    with criterion(
        "aggregated-vs-raw LSTM (higher attack F1 and >=5x lower train time "
        "with aggregation)"
    ):
        report = compare_flare(
            compare_corpus["packets"],
            compare_corpus["truth"],
            compare_corpus["aggregated"],
            model="lstm",
            task="binary",
            seed=3,
            epochs=8,
        )
        with_agg = report["sides"]["with_flare"]
        without = report["sides"]["without_flare"]
        f1_with = with_agg["per_class"]["Attack"]["f1"]
        f1_without = without["per_class"]["Attack"]["f1"]
        assert f1_with > f1_without, f"attack F1 {f1_with:.4f} !> {f1_without:.4f}"
        ratio = without["train_time_s"] / with_agg["train_time_s"]
        assert ratio >= 5.0, f"train-time ratio {ratio:.2f} < 5"
        assert with_agg["cpu_before"] >= 0 and with_agg["cpu_after"] >= 0
