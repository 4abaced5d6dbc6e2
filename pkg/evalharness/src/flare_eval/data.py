"""Dataset loading against the flare export formats.

The harness only touches the published CSV schemas: the aggregated
feature table (windows joined with sessions plus label columns), the
raw packet CSV, and the truth-interval CSV. Raw packets can be labeled
here with the same interval-matching rule the aggregation pipeline uses,
which gives the per-packet dataset for the no-aggregation baselines.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

BENIGN = "Benign"

# Columns of aggregated.csv that are identifiers or targets, not features.
NON_FEATURE_COLUMNS = {
    "start_time",
    "end_time",
    "session_start_time",
    "session_match",
    "label_binary",
    "label_multi",
}

PACKET_CSV_HEADER = [
    "ts_ns", "src_ip", "dst_ip", "src_port", "dst_port", "protocol", "length", "tcp_flags",
]

TRUTH_CSV_HEADER = [
    "src_ip", "dst_ip", "src_port", "dst_port", "protocol", "start_ts_ns", "end_ts_ns", "label",
]


@dataclass
class Dataset:
    feature_names: list[str]
    X: np.ndarray
    y_binary: np.ndarray  # of str
    y_multi: np.ndarray   # of str

    def labels(self, task: str) -> np.ndarray:
        if task == "binary":
            return self.y_binary
        if task == "multi":
            return self.y_multi
        raise ValueError(f"unknown task: {task}")


def load_aggregated(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if "label_binary" not in header or "label_multi" not in header:
            raise ValueError(f"{path} lacks label columns; run the merge stage with --truth")
        feature_idx = [i for i, name in enumerate(header) if name not in NON_FEATURE_COLUMNS]
        bin_idx = header.index("label_binary")
        multi_idx = header.index("label_multi")
        rows, y_bin, y_multi = [], [], []
        for row in reader:
            rows.append([float(row[i]) for i in feature_idx])
            y_bin.append(row[bin_idx])
            y_multi.append(row[multi_idx])
    if not rows:
        raise ValueError(f"no rows in {path}")
    return Dataset(
        feature_names=[header[i] for i in feature_idx],
        X=np.asarray(rows, dtype=float),
        y_binary=np.asarray(y_bin),
        y_multi=np.asarray(y_multi),
    )


@dataclass
class _Interval:
    src_ip: str | None
    dst_ip: str | None
    src_port: int | None
    dst_port: int | None
    protocol: int | None
    start_ts: int
    end_ts: int
    label: str


def _read_truth(path) -> list[_Interval]:
    intervals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRUTH_CSV_HEADER:
            raise ValueError(f"bad truth CSV header in {path}")
        for row in reader:
            intervals.append(
                _Interval(
                    src_ip=None if row[0] == "*" else row[0],
                    dst_ip=None if row[1] == "*" else row[1],
                    src_port=None if row[2] == "*" else int(row[2]),
                    dst_port=None if row[3] == "*" else int(row[3]),
                    protocol=None if row[4] == "*" else int(row[4]),
                    start_ts=int(row[5]),
                    end_ts=int(row[6]),
                    label=row[7],
                )
            )
    return intervals


def load_packets_labeled(packets_csv, truth_csv) -> Dataset:
    """Per-packet dataset: numeric packet features with interval-derived labels."""
    intervals = _read_truth(truth_csv)
    rows = []
    with open(packets_csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != PACKET_CSV_HEADER:
            raise ValueError(f"bad packet CSV header in {packets_csv}")
        for row in reader:
            rows.append(
                (int(row[0]), row[1], row[2], int(row[3]), int(row[4]),
                 int(row[5]), int(row[6]), int(row[7]))
            )
    rows.sort(key=lambda r: r[0])

    features = np.zeros((len(rows), 12), dtype=float)
    labels = []
    prev_ts = rows[0][0] if rows else 0
    for i, (ts, src, dst, sport, dport, proto, length, flags) in enumerate(rows):
        features[i, 0] = (ts - prev_ts) / 1e9
        features[i, 1] = length
        features[i, 2] = 1.0 if proto == 6 else 0.0
        features[i, 3] = 1.0 if proto == 17 else 0.0
        features[i, 4] = sport / 65535.0
        features[i, 5] = dport / 65535.0
        for bit in range(6):
            features[i, 6 + bit] = (flags >> bit) & 1
        prev_ts = ts
        label = BENIGN
        for t in intervals:
            if (
                t.start_ts <= ts <= t.end_ts
                and (t.src_ip is None or t.src_ip == src)
                and (t.dst_ip is None or t.dst_ip == dst)
                and (t.src_port is None or t.src_port == sport)
                and (t.dst_port is None or t.dst_port == dport)
                and (t.protocol is None or t.protocol == proto)
            ):
                label = t.label
                break
        labels.append(label)

    y_multi = np.asarray(labels)
    y_binary = np.where(y_multi == BENIGN, BENIGN, "Attack")
    names = ["dt_s", "length", "is_tcp", "is_udp", "src_port", "dst_port",
             "fin", "syn", "rst", "psh", "ack", "urg"]
    return Dataset(feature_names=names, X=features, y_binary=y_binary, y_multi=y_multi)


def build_sequences(
    dataset: Dataset, task: str, seq_len: int, stride: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Sliding sequences over consecutive rows; label = majority in the span."""
    y = dataset.labels(task)
    n = len(dataset.X)
    if n < seq_len:
        raise ValueError("not enough rows for one sequence")
    starts = range(0, n - seq_len + 1, stride)
    X_seq = np.stack([dataset.X[s : s + seq_len] for s in starts])
    labels = []
    for s in starts:
        values, counts = np.unique(y[s : s + seq_len], return_counts=True)
        labels.append(values[counts.argmax()])
    return X_seq, np.asarray(labels)


def standardize_train_test(train: np.ndarray, test: np.ndarray):
    """Z-score with train statistics only; constant columns pass through."""
    axes = tuple(range(train.ndim - 1))
    mean = train.mean(axis=axes)
    std = train.std(axis=axes)
    std = np.where(std == 0, 1.0, std)
    return (train - mean) / std, (test - mean) / std
