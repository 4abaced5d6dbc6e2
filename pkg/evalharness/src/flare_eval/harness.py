"""Evaluation harness: splits/folds, SMOTE on training data only, per-class
metrics from stored confusion matrices, and the aggregated-vs-raw
sequence-model comparison."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, build_sequences, load_aggregated, load_packets_labeled, \
    standardize_train_test
from .models import ALL_MODELS, SEQUENCE_MODELS, make_model, timed_fit
from .smote import smote_oversample


@dataclass
class EvalConfig:
    dataset: str
    task: str = "binary"                 # binary | multi
    models: list[str] = field(default_factory=lambda: ["rf", "svc", "xgb", "ffnn"])
    folds: int = 10
    cv: bool = False                     # when true, pool predictions over all folds
    smote: bool = True
    seed: int = 0
    test_size: float = 0.25
    epochs: int | None = None

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.task not in ("binary", "multi"):
            raise ValueError(f"unknown task: {self.task}")
        unknown = set(self.models) - set(ALL_MODELS)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")


@dataclass
class ModelResult:
    model: str
    classes: list[str]
    confusion: list[list[int]]           # rows = true class, cols = predicted
    per_class: dict[str, dict[str, float]]
    accuracy: float
    train_time_s: float
    cpu_before: float
    cpu_after: float


def metrics_from_confusion(confusion: np.ndarray, classes: list[str]):
    """Per-class precision/recall/F1 plus overall accuracy."""
    confusion = np.asarray(confusion, dtype=float)
    per_class = {}
    for i, cls in enumerate(classes):
        tp = confusion[i, i]
        predicted = confusion[:, i].sum()
        actual = confusion[i, :].sum()
        precision = tp / predicted if predicted else 0.0
        recall = tp / actual if actual else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": int(actual),
        }
    accuracy = confusion.trace() / confusion.sum() if confusion.sum() else 0.0
    return per_class, float(accuracy)


def _encode(y: np.ndarray) -> tuple[np.ndarray, list[str]]:
    classes = sorted(set(y.tolist()))
    index = {c: i for i, c in enumerate(classes)}
    return np.asarray([index[v] for v in y]), classes


def _confusion(y_true, y_pred, n: int) -> np.ndarray:
    cm = np.zeros((n, n), dtype=int)
    for t, p in zip(y_true, y_pred):
        cm[t, p] += 1
    return cm


def _prepare_train(X_train, y_train, cfg: EvalConfig):
    if cfg.smote:
        return smote_oversample(X_train, y_train, seed=cfg.seed)
    return X_train, y_train


def train_eval(cfg: EvalConfig) -> dict:
    """Run every configured model; returns the report dict (JSON-ready)."""
    dataset = load_aggregated(cfg.dataset)
    y_raw = dataset.labels(cfg.task)
    y, classes = _encode(y_raw)
    if len(classes) < 2:
        raise ValueError("dataset holds a single class; nothing to classify")

    from sklearn.model_selection import StratifiedKFold, train_test_split

    results = []
    for name in cfg.models:
        if name in SEQUENCE_MODELS:
            raise ValueError(f"{name} is a sequence model; use compare_flare")
        total_cm = np.zeros((len(classes), len(classes)), dtype=int)
        total_time = 0.0
        cpu_before = cpu_after = 0.0

        if cfg.cv:
            splitter = StratifiedKFold(n_splits=cfg.folds, shuffle=True, random_state=cfg.seed)
            splits = splitter.split(dataset.X, y)
        else:
            train_idx, test_idx = train_test_split(
                np.arange(len(y)), test_size=cfg.test_size, stratify=y, random_state=cfg.seed
            )
            splits = [(train_idx, test_idx)]

        for train_idx, test_idx in splits:
            X_train, X_test = standardize_train_test(
                dataset.X[train_idx], dataset.X[test_idx]
            )
            y_train = y[train_idx]
            X_train, y_train = _prepare_train(X_train, y_train, cfg)
            model = make_model(name, cfg.task, len(classes), cfg.seed,
                               (dataset.X.shape[1],), cfg.epochs)
            stats = timed_fit(model, X_train, y_train)
            total_time += stats.train_time_s
            cpu_before, cpu_after = stats.cpu_before, stats.cpu_after
            predictions = model.predict(X_test)
            total_cm += _confusion(y[test_idx], predictions, len(classes))

        per_class, accuracy = metrics_from_confusion(total_cm, classes)
        results.append(
            ModelResult(
                model=name,
                classes=classes,
                confusion=total_cm.tolist(),
                per_class=per_class,
                accuracy=accuracy,
                train_time_s=total_time,
                cpu_before=cpu_before,
                cpu_after=cpu_after,
            )
        )

    return {
        "task": cfg.task,
        "dataset": cfg.dataset,
        "smote": cfg.smote,
        "cv": cfg.cv,
        "folds": cfg.folds if cfg.cv else 1,
        "seed": cfg.seed,
        "determinism": "seeded; keras fits are best-effort deterministic on CPU",
        "models": [r.__dict__ for r in results],
    }


def compare_flare(
    packets_csv,
    truth_csv,
    aggregated_csv,
    model: str = "lstm",
    task: str = "binary",
    seed: int = 0,
    seq_len: int = 1,
    epochs: int = 5,
    batch_size: int = 32,
    test_size: float = 0.25,
    smote_aggregated: bool = True,
) -> dict:
    """Train one sequence architecture on the aggregated dataset and on raw
    per-packet rows labeled from the same truth; pair the reports.

    Both sides feed the net one row per instance (seq_len defaults to 1),
    so the raw baseline sees exactly the per-packet feature rows while the
    aggregated side sees the window/session feature rows. Mirroring the
    published procedure, the aggregated training rows are SMOTE-balanced
    (interpolating raw packet sequences is not meaningful).
    """
    if model not in SEQUENCE_MODELS:
        raise ValueError(f"compare_flare needs a sequence model, not {model!r}")

    raw = load_packets_labeled(packets_csv, truth_csv)
    X_raw, y_raw = build_sequences(raw, task, seq_len=seq_len, stride=1)

    aggregated = load_aggregated(aggregated_csv)
    X_agg = aggregated.X[:, None, :]  # aggregated rows as length-1 sequences
    y_agg = aggregated.labels(task)

    sides = {
        "with_flare": (X_agg, y_agg),
        "without_flare": (X_raw, y_raw),
    }
    report = {"model": model, "task": task, "seed": seed, "sides": {}}
    from sklearn.model_selection import train_test_split

    from .models import warm_up_tensorflow

    warm_up_tensorflow()  # keep TF graph startup out of the timed fits
    for side, (X, y_labels) in sides.items():
        y, classes = _encode(np.asarray(y_labels))
        if len(classes) < 2:
            raise ValueError(f"{side}: single-class data")
        train_idx, test_idx = train_test_split(
            np.arange(len(y)), test_size=test_size, stratify=y, random_state=seed
        )
        X_train, X_test = standardize_train_test(X[train_idx], X[test_idx])
        y_train = y[train_idx]
        if side == "with_flare" and smote_aggregated:
            flat, y_train = smote_oversample(X_train[:, 0, :], y_train, seed=seed)
            X_train = flat[:, None, :]
        net = make_model(model, task, len(classes), seed, X.shape[1:], epochs, batch_size)
        stats = timed_fit(net, X_train, y_train)
        predictions = net.predict(X_test)
        cm = _confusion(y[test_idx], predictions, len(classes))
        per_class, accuracy = metrics_from_confusion(cm, classes)
        report["sides"][side] = {
            "rows": int(len(y)),
            "classes": classes,
            "confusion": cm.tolist(),
            "per_class": per_class,
            "accuracy": accuracy,
            "train_time_s": stats.train_time_s,
            "cpu_before": stats.cpu_before,
            "cpu_after": stats.cpu_after,
        }
    return report


def save_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
