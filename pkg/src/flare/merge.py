"""As-of merge of window and session records, plus ground-truth labeling.

Each window joins the session with the greatest start_time not after its
own (backward-nearest, inclusive). Labels come from explicit truth
intervals: a window is an attack when at least one of its packets matches
an interval's 5-tuple pattern inside its time span; the class is the
majority among matched packets, ties broken by earliest interval start.
"""

from __future__ import annotations

import csv
import logging
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

from .packets import PacketRecord, SchemaError
from .sessions import SESSION_FEATURES, SessionRecord, _INT_FEATURES
from .windows import WINDOW_CSV_FIELDS, _INT_FIELDS as _WINDOW_INT_FIELDS, WindowRecord

logger = logging.getLogger(__name__)

BENIGN = "Benign"
ATTACK = "Attack"
ATTACK_LABELS = ("HTTP Flood", "TCP SYN Flood", "UDP Flood", "XMas Tree Flood")

TRUTH_CSV_FIELDS = [
    "src_ip",
    "dst_ip",
    "src_port",
    "dst_port",
    "protocol",
    "start_ts_ns",
    "end_ts_ns",
    "label",
]

AGGREGATED_CSV_FIELDS = (
    WINDOW_CSV_FIELDS
    + ["session_start_time"]
    + SESSION_FEATURES
    + ["session_match", "label_binary", "label_multi"]
)


@dataclass(frozen=True, slots=True)
class TruthInterval:
    """Attack ground truth: 5-tuple pattern (None = wildcard) over a time span."""

    src_ip: str | None
    dst_ip: str | None
    src_port: int | None
    dst_port: int | None
    protocol: int | None
    start_ts: int
    end_ts: int
    label: str

    def __post_init__(self):
        if self.start_ts > self.end_ts:
            raise ValueError("truth interval start after end")
        if self.label == BENIGN:
            raise ValueError("truth intervals carry attack labels only")

    def matches(self, p: PacketRecord) -> bool:
        if not (self.start_ts <= p.ts <= self.end_ts):
            return False
        return (
            (self.src_ip is None or self.src_ip == p.src_ip)
            and (self.dst_ip is None or self.dst_ip == p.dst_ip)
            and (self.src_port is None or self.src_port == p.src_port)
            and (self.dst_port is None or self.dst_port == p.dst_port)
            and (self.protocol is None or self.protocol == p.protocol)
        )


@dataclass(slots=True)
class AggregatedRecord:
    window: WindowRecord
    session: SessionRecord | None
    session_match: bool
    label_binary: str = BENIGN
    label_multi: str = BENIGN


def asof_merge(
    windows: Sequence[WindowRecord], sessions: Sequence[SessionRecord]
) -> list[AggregatedRecord]:
    """Two-pointer backward as-of join on start_time; output per window."""
    _check_sorted(w.start_time for w in windows)
    _check_sorted(s.start_time for s in sessions)
    merged = []
    j = -1
    for w in windows:
        while j + 1 < len(sessions) and sessions[j + 1].start_time <= w.start_time:
            j += 1
        session = sessions[j] if j >= 0 else None
        merged.append(AggregatedRecord(window=w, session=session, session_match=session is not None))
    return merged


def _check_sorted(values) -> None:
    prev = None
    for v in values:
        if prev is not None and v < prev:
            raise ValueError("asof_merge inputs must be sorted by start_time")
        prev = v


def apply_labels(
    records: Sequence[AggregatedRecord],
    truth: Sequence[TruthInterval],
    packets: Sequence[PacketRecord],
) -> None:
    """Label each record in place from per-packet truth-interval matches."""
    ts = [p.ts for p in packets]
    for record in records:
        w = record.window
        lo = bisect_left(ts, w.start_time)
        hi = bisect_left(ts, w.end_time)
        votes: dict[str, int] = {}
        earliest: dict[str, int] = {}
        for i in range(lo, hi):
            p = packets[i]
            matched: set[str] = set()
            for interval in truth:
                if interval.matches(p):
                    matched.add(interval.label)
                    prior = earliest.get(interval.label)
                    if prior is None or interval.start_ts < prior:
                        earliest[interval.label] = interval.start_ts
            for label in matched:
                votes[label] = votes.get(label, 0) + 1
            if len(matched) > 1:
                logger.warning(
                    "packet at ts=%d matches %d attack classes; majority rule applies",
                    p.ts,
                    len(matched),
                )
        if votes:
            record.label_multi = min(
                votes, key=lambda label: (-votes[label], earliest[label], label)
            )
            record.label_binary = ATTACK
        else:
            record.label_multi = BENIGN
            record.label_binary = BENIGN


def read_truth_csv(path) -> list[TruthInterval]:
    intervals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRUTH_CSV_FIELDS:
            raise SchemaError(f"bad truth CSV header in {path}")
        for row in reader:
            intervals.append(
                TruthInterval(
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


def write_truth_csv(intervals: Sequence[TruthInterval], path) -> int:
    def cell(v):
        return "*" if v is None else v

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_CSV_FIELDS)
        for t in intervals:
            writer.writerow(
                [cell(t.src_ip), cell(t.dst_ip), cell(t.src_port), cell(t.dst_port),
                 cell(t.protocol), t.start_ts, t.end_ts, t.label]
            )
    return len(intervals)


def write_aggregated_csv(
    records: Sequence[AggregatedRecord], path, drop_unmatched: bool = True
) -> int:
    """Export merged rows; unmatched windows are dropped unless kept explicitly."""
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATED_CSV_FIELDS)
        for r in records:
            if drop_unmatched and not r.session_match:
                continue
            row = [
                getattr(r.window, name)
                if name in _WINDOW_INT_FIELDS
                else f"{getattr(r.window, name):.6f}"
                for name in WINDOW_CSV_FIELDS
            ]
            if r.session is not None:
                row.append(r.session.start_time)
                for name in SESSION_FEATURES:
                    value = getattr(r.session, name)
                    row.append(value if name in _INT_FEATURES else f"{value:.6f}")
            else:
                row.extend([""] * (1 + len(SESSION_FEATURES)))
            row.extend([str(r.session_match).lower(), r.label_binary, r.label_multi])
            writer.writerow(row)
            count += 1
    return count
