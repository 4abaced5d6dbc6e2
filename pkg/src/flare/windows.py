"""Sliding-window aggregation over a time-ordered packet stream.

A window of fixed width slides by a step no larger than the width. The
grid of start times is anchored at the first packet timestamp and runs
up to and including the last value not beyond the final packet. Each
window covers [start, start + width) and empty windows are skipped, so
overlapping windows never double-count a boundary packet. Per-packet
direction comes from session assembly rather than being recomputed here.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

from .packets import PacketRecord
from .sessions import mean, pstdev
from .units import NS_PER_S


@dataclass(slots=True)
class WindowRecord:
    start_time: int
    end_time: int
    packet_count_window: int
    total_fwd_pkts_window: int
    total_bwd_pkts_window: int
    total_fwd_bytes_window: int
    total_bwd_bytes_window: int
    avg_pkt_size_fwd_window: float
    avg_pkt_size_bwd_window: float
    flow_duration_window: int
    mean_iat_fwd_window: float
    stddev_iat_fwd_window: float
    mean_iat_bwd_window: float
    stddev_iat_bwd_window: float
    pkts_per_sec_window: float
    bytes_per_sec_window: float
    fwd_bwd_pkt_ratio: float
    fwd_bwd_byte_ratio: float
    entropy_src_ip: float
    entropy_dst_ip: float


WINDOW_CSV_FIELDS = [f.name for f in fields(WindowRecord)]

_INT_FIELDS = {
    "start_time",
    "end_time",
    "packet_count_window",
    "total_fwd_pkts_window",
    "total_bwd_pkts_window",
    "total_fwd_bytes_window",
    "total_bwd_bytes_window",
    "flow_duration_window",
}


def shannon_entropy(values: Iterable) -> float:
    """Shannon entropy in bits of the value multiset: -sum p_i log2 p_i."""
    counts: dict = {}
    total = 0
    for v in values:
        counts[v] = counts.get(v, 0) + 1
        total += 1
    if total == 0:
        raise ValueError("entropy of an empty multiset is undefined")
    h = 0.0
    for c in counts.values():
        p = c / total
        h -= p * math.log2(p)
    return h


def directional_ratio_features(
    fwd_pkts: int, bwd_pkts: int, fwd_bytes: int, bwd_bytes: int
) -> tuple[float, float]:
    """Forward-to-backward ratios; a zero denominator is clamped to 1 so
    one-directional floods stay finite and monotone in forward volume."""
    return fwd_pkts / max(bwd_pkts, 1), fwd_bytes / max(bwd_bytes, 1)


def flow_rate_features(pkts: int, total_bytes: int, window_ns: int) -> tuple[float, float]:
    """Per-second rates over the full window width (constant denominator)."""
    seconds = window_ns / NS_PER_S
    return pkts / seconds, total_bytes / seconds


def generate_windows(
    packets: Sequence[PacketRecord],
    directions: Sequence[bool],
    window_ns: int,
    step_ns: int,
    workers: int = 1,
) -> list[WindowRecord]:
    """Emit one WindowRecord per nonempty window, ordered by start time."""
    if step_ns <= 0:
        raise ValueError("step_size must be positive")
    if window_ns < step_ns:
        raise ValueError("window_size must be at least step_size")
    if len(packets) != len(directions):
        raise ValueError("directions must align with packets")
    if not packets:
        return []
    ts = [p.ts for p in packets]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("packets must be sorted by timestamp")

    t0 = ts[0]
    n_starts = (ts[-1] - t0) // step_ns + 1

    def build(i: int) -> WindowRecord | None:
        start = t0 + i * step_ns
        lo = bisect_left(ts, start)
        hi = bisect_left(ts, start + window_ns)
        if lo == hi:
            return None
        return _window_features(packets, directions, lo, hi, start, window_ns)

    if workers <= 1:
        produced = map(build, range(n_starts))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            produced = list(pool.map(build, range(n_starts), chunksize=256))
    return [w for w in produced if w is not None]


def _window_features(
    packets: Sequence[PacketRecord],
    directions: Sequence[bool],
    lo: int,
    hi: int,
    start: int,
    window_ns: int,
) -> WindowRecord:
    fwd_ts: list[int] = []
    bwd_ts: list[int] = []
    fwd_bytes = 0
    bwd_bytes = 0
    src_ips: list[str] = []
    dst_ips: list[str] = []
    for i in range(lo, hi):
        p = packets[i]
        src_ips.append(p.src_ip)
        dst_ips.append(p.dst_ip)
        if directions[i]:
            fwd_ts.append(p.ts)
            fwd_bytes += p.length
        else:
            bwd_ts.append(p.ts)
            bwd_bytes += p.length

    n = hi - lo
    n_fwd = len(fwd_ts)
    n_bwd = len(bwd_ts)
    fwd_iats = [b - a for a, b in zip(fwd_ts, fwd_ts[1:])]
    bwd_iats = [b - a for a, b in zip(bwd_ts, bwd_ts[1:])]
    pkt_rate, byte_rate = flow_rate_features(n, fwd_bytes + bwd_bytes, window_ns)
    pkt_ratio, byte_ratio = directional_ratio_features(n_fwd, n_bwd, fwd_bytes, bwd_bytes)

    return WindowRecord(
        start_time=start,
        end_time=start + window_ns,
        packet_count_window=n,
        total_fwd_pkts_window=n_fwd,
        total_bwd_pkts_window=n_bwd,
        total_fwd_bytes_window=fwd_bytes,
        total_bwd_bytes_window=bwd_bytes,
        avg_pkt_size_fwd_window=fwd_bytes / n_fwd if n_fwd else 0.0,
        avg_pkt_size_bwd_window=bwd_bytes / n_bwd if n_bwd else 0.0,
        flow_duration_window=packets[hi - 1].ts - packets[lo].ts,
        mean_iat_fwd_window=mean(fwd_iats),
        stddev_iat_fwd_window=pstdev(fwd_iats),
        mean_iat_bwd_window=mean(bwd_iats),
        stddev_iat_bwd_window=pstdev(bwd_iats),
        pkts_per_sec_window=pkt_rate,
        bytes_per_sec_window=byte_rate,
        fwd_bwd_pkt_ratio=pkt_ratio,
        fwd_bwd_byte_ratio=byte_ratio,
        entropy_src_ip=shannon_entropy(src_ips),
        entropy_dst_ip=shannon_entropy(dst_ips),
    )


def write_windows_csv(records: Sequence[WindowRecord], path) -> int:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WINDOW_CSV_FIELDS)
        for r in records:
            writer.writerow(
                [
                    getattr(r, name) if name in _INT_FIELDS else f"{getattr(r, name):.6f}"
                    for name in WINDOW_CSV_FIELDS
                ]
            )
    return len(records)


def read_windows_csv(path) -> list[WindowRecord]:
    from .packets import SchemaError

    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != WINDOW_CSV_FIELDS:
            raise SchemaError(f"bad windows CSV header in {path}")
        for row in reader:
            kwargs = {
                name: int(cell) if name in _INT_FIELDS else float(cell)
                for name, cell in zip(WINDOW_CSV_FIELDS, row)
            }
            records.append(WindowRecord(**kwargs))
    return records
