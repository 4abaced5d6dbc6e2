"""Window-size selection by pooled within-window mean squared error.

Sessions are binned by start_time into consecutive non-overlapping
windows of the candidate width; the score pools each session's squared
deviation from its own window's mean. A smaller value means the feature
is more stable at that granularity, so the per-feature winner is the
width with the minimum score (ties go to the smallest width).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from typing import Sequence

from .sessions import SessionRecord
from .units import format_duration

DEFAULT_FEATURES = [
    "flow_pkts_s",
    "flow_byts_s",
    "flow_duration",
    "tot_fwd_pkts",
    "tot_bwd_pkts",
    "fwd_iat_tot",
    "bwd_iat_tot",
    "fwd_pkts_b_avg",
    "bwd_byts_b_avg",
]

_NUMERIC_FIELDS = {
    f.name for f in fields(SessionRecord) if f.type in ("int", "float")
} - {"start_time", "end_time"}


@dataclass
class TuneReport:
    candidates_ns: list[int]
    features: list[str]
    mse: dict[tuple[str, int], float]   # (feature, window_ns) -> score
    best_window: dict[str, int]         # feature -> window_ns
    note: str = "lower is better: the score pools within-window variability"


def window_mse(sessions: Sequence[SessionRecord], feature: str, window_ns: int) -> float:
    """Pooled squared deviation about each window's own feature mean."""
    if feature not in _NUMERIC_FIELDS:
        raise ValueError(f"unknown session feature: {feature}")
    if not sessions:
        raise ValueError("window_mse needs at least one session")
    if window_ns <= 0:
        raise ValueError("window size must be positive")
    t0 = min(s.start_time for s in sessions)
    bins: dict[int, list[float]] = {}
    for s in sessions:
        bins.setdefault((s.start_time - t0) // window_ns, []).append(float(getattr(s, feature)))
    total_sq = 0.0
    count = 0
    for values in bins.values():
        m = sum(values) / len(values)
        total_sq += sum((v - m) ** 2 for v in values)
        count += len(values)
    return total_sq / count


def select_window(
    sessions: Sequence[SessionRecord],
    candidates_ns: Sequence[int],
    features: Sequence[str] | None = None,
) -> TuneReport:
    if not candidates_ns:
        raise ValueError("need at least one candidate window size")
    feature_list = list(features) if features else list(DEFAULT_FEATURES)
    grid: dict[tuple[str, int], float] = {}
    best: dict[str, int] = {}
    for feature in feature_list:
        for window_ns in candidates_ns:
            grid[(feature, window_ns)] = window_mse(sessions, feature, window_ns)
        best[feature] = min(sorted(candidates_ns), key=lambda w: grid[(feature, w)])
    return TuneReport(
        candidates_ns=list(candidates_ns),
        features=feature_list,
        mse=grid,
        best_window=best,
    )


def write_tune_csv(report: TuneReport, path) -> None:
    labels = [format_duration(c) for c in report.candidates_ns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature"] + [f"mse_{lbl}" for lbl in labels] + ["best_window"])
        for feature in report.features:
            row = [feature]
            row += [f"{report.mse[(feature, c)]:.6f}" for c in report.candidates_ns]
            row.append(format_duration(report.best_window[feature]))
            writer.writerow(row)
