"""Bidirectional session assembly and flow-level feature computation.

Packets sharing a canonical 5-tuple belong to one session until it is
terminated by an idle gap, a TCP RST, or a FIN seen in both directions.
Forward is the direction of the session's first packet (the initiator).
All statistics use population standard deviation; families with no
samples are zero. Rates clamp a zero duration to one microsecond so
single-packet bursts keep an enormous, finite rate.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, fields
from typing import Sequence

from .packets import FIN, PROTO_TCP, RST, PacketRecord
from .units import NS_PER_S, NS_PER_US

RATE_CLAMP_NS = NS_PER_US  # minimum duration used for per-second rates


@dataclass(frozen=True, slots=True)
class FlowKey:
    """Canonical bidirectional flow key: the smaller (ip, port) endpoint first."""

    ip_a: str
    port_a: int
    ip_b: str
    port_b: int
    protocol: int


def canonical_key(packet: PacketRecord) -> FlowKey:
    a = (packet.src_ip, packet.src_port)
    b = (packet.dst_ip, packet.dst_port)
    if b < a:
        a, b = b, a
    return FlowKey(a[0], a[1], b[0], b[1], packet.protocol)


@dataclass(slots=True)
class SessionParams:
    idle_timeout_ns: int = 120 * NS_PER_S
    subflow_gap_ns: int = 1 * NS_PER_S
    bulk_min: int = 4
    bulk_idle_ns: int = 1 * NS_PER_S


@dataclass(slots=True)
class SessionRecord:
    flow_key: FlowKey
    initiator: str
    start_time: int
    end_time: int
    flow_duration: int
    tot_fwd_pkts: int
    tot_bwd_pkts: int
    total_bytes_forward: int
    total_bwd_bytes: int
    fwd_pkt_len_min: int
    fwd_pkt_len_max: int
    fwd_pkt_len_mean: float
    fwd_pkt_len_std: float
    bwd_pkt_len_min: int
    bwd_pkt_len_max: int
    bwd_pkt_len_mean: float
    bwd_pkt_len_std: float
    mean_packet_length_forward: float
    mean_pkt_length_bwd: float
    packet_size_mean: float
    fwd_iat_tot: int
    fwd_iat_mean: float
    fwd_iat_std: float
    fwd_iat_max: int
    fwd_iat_min: int
    bwd_iat_tot: int
    bwd_iat_mean: float
    bwd_iat_std: float
    bwd_iat_max: int
    bwd_iat_min: int
    flow_iat_tot: int
    flow_iat_mean: float
    flow_iat_std: float
    flow_iat_max: int
    flow_iat_min: int
    flow_pkts_s: float
    flow_byts_s: float
    down_up_ratio: float
    subflow_fwd_pkts: float
    subflow_bwd_pkts: float
    subflow_fwd_byts: float
    subflow_bwd_byts: float
    fwd_pkts_b_avg: float
    fwd_byts_b_avg: float
    bwd_pkts_b_avg: float
    bwd_byts_b_avg: float


# Feature columns carried into the merged dataset (identifiers excluded).
SESSION_FEATURES = [f.name for f in fields(SessionRecord)][4:]

SESSION_CSV_FIELDS = (
    ["ip_a", "port_a", "ip_b", "port_b", "protocol", "initiator", "start_time", "end_time"]
    + SESSION_FEATURES
)

_INT_FEATURES = {
    "flow_duration",
    "tot_fwd_pkts",
    "tot_bwd_pkts",
    "total_bytes_forward",
    "total_bwd_bytes",
    "fwd_pkt_len_min",
    "fwd_pkt_len_max",
    "bwd_pkt_len_min",
    "bwd_pkt_len_max",
    "fwd_iat_tot",
    "fwd_iat_max",
    "fwd_iat_min",
    "bwd_iat_tot",
    "bwd_iat_max",
    "bwd_iat_min",
    "flow_iat_tot",
    "flow_iat_max",
    "flow_iat_min",
}


def mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def pstdev(xs: Sequence[float]) -> float:
    if not xs:
        return 0.0
    m = sum(xs) / len(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))


class _OpenSession:
    __slots__ = ("initiator", "packets", "fin_fwd", "fin_bwd", "seq")

    def __init__(self, first: PacketRecord, seq: int):
        self.initiator = (first.src_ip, first.src_port)
        self.packets: list[tuple[PacketRecord, bool]] = []
        self.fin_fwd = False
        self.fin_bwd = False
        self.seq = seq


class SessionAssembler:
    """Single-writer session table fed with a time-ordered packet stream."""

    def __init__(self, params: SessionParams | None = None):
        self.params = params or SessionParams()
        self._open: dict[FlowKey, _OpenSession] = {}
        self._closed: list[_OpenSession] = []
        self._seq = 0
        self._last_ts: int | None = None
        self.directions: list[bool] = []

    def feed(self, packet: PacketRecord) -> None:
        if self._last_ts is not None and packet.ts < self._last_ts:
            raise ValueError("packets must arrive in nondecreasing timestamp order")
        self._last_ts = packet.ts
        key = canonical_key(packet)
        sess = self._open.get(key)
        if sess is not None and packet.ts - sess.packets[-1][0].ts > self.params.idle_timeout_ns:
            self._close(key, sess)
            sess = None
        if sess is None:
            sess = _OpenSession(packet, self._seq)
            self._seq += 1
            self._open[key] = sess
        is_fwd = (packet.src_ip, packet.src_port) == sess.initiator
        sess.packets.append((packet, is_fwd))
        self.directions.append(is_fwd)
        if packet.protocol == PROTO_TCP:
            if packet.tcp_flags & RST:
                self._close(key, sess)
            elif packet.tcp_flags & FIN:
                if is_fwd:
                    sess.fin_fwd = True
                else:
                    sess.fin_bwd = True
                if sess.fin_fwd and sess.fin_bwd:
                    self._close(key, sess)

    def _close(self, key: FlowKey, sess: _OpenSession) -> None:
        self._closed.append(sess)
        del self._open[key]

    def finish(self) -> list[SessionRecord]:
        """Close everything still open and return records sorted by start_time."""
        for key in list(self._open):
            self._close(key, self._open[key])
        done = sorted(self._closed, key=lambda s: (s.packets[0][0].ts, s.seq))
        return [
            finalize_session([p for p, _ in s.packets], [d for _, d in s.packets], self.params)
            for s in done
        ]


def aggregate_sessions(
    packets: Sequence[PacketRecord], params: SessionParams | None = None
) -> tuple[list[SessionRecord], list[bool]]:
    """Run full session assembly; also returns per-packet forward flags."""
    assembler = SessionAssembler(params)
    for packet in packets:
        assembler.feed(packet)
    return assembler.finish(), assembler.directions


def finalize_session(
    packets: Sequence[PacketRecord],
    directions: Sequence[bool],
    params: SessionParams | None = None,
) -> SessionRecord:
    """Compute every flow feature for one session's packets (>= 1)."""
    if not packets:
        raise ValueError("a session needs at least one packet")
    params = params or SessionParams()
    first = packets[0]
    key = canonical_key(first)
    start = first.ts
    end = packets[-1].ts
    duration = end - start

    fwd_lens = [p.length for p, d in zip(packets, directions) if d]
    bwd_lens = [p.length for p, d in zip(packets, directions) if not d]
    all_lens = [p.length for p in packets]
    fwd_ts = [p.ts for p, d in zip(packets, directions) if d]
    bwd_ts = [p.ts for p, d in zip(packets, directions) if not d]
    all_ts = [p.ts for p in packets]

    fwd_iats = _iats(fwd_ts)
    bwd_iats = _iats(bwd_ts)
    flow_iats = _iats(all_ts)

    total_fwd_bytes = sum(fwd_lens)
    total_bwd_bytes = sum(bwd_lens)
    n_fwd = len(fwd_lens)
    n_bwd = len(bwd_lens)

    rate_seconds = max(duration, RATE_CLAMP_NS) / NS_PER_S
    sub_f_p, sub_b_p, sub_f_b, sub_b_b = subflow_stats(packets, directions, params.subflow_gap_ns)
    blk_f_p, blk_f_b, blk_b_p, blk_b_b = bulk_stats(
        packets, directions, params.bulk_min, params.bulk_idle_ns
    )

    return SessionRecord(
        flow_key=key,
        initiator=f"{first.src_ip}:{first.src_port}",
        start_time=start,
        end_time=end,
        flow_duration=duration,
        tot_fwd_pkts=n_fwd,
        tot_bwd_pkts=n_bwd,
        total_bytes_forward=total_fwd_bytes,
        total_bwd_bytes=total_bwd_bytes,
        fwd_pkt_len_min=min(fwd_lens) if fwd_lens else 0,
        fwd_pkt_len_max=max(fwd_lens) if fwd_lens else 0,
        fwd_pkt_len_mean=mean(fwd_lens),
        fwd_pkt_len_std=pstdev(fwd_lens),
        bwd_pkt_len_min=min(bwd_lens) if bwd_lens else 0,
        bwd_pkt_len_max=max(bwd_lens) if bwd_lens else 0,
        bwd_pkt_len_mean=mean(bwd_lens),
        bwd_pkt_len_std=pstdev(bwd_lens),
        mean_packet_length_forward=mean(fwd_lens),
        mean_pkt_length_bwd=mean(bwd_lens),
        packet_size_mean=mean(all_lens),
        fwd_iat_tot=sum(fwd_iats),
        fwd_iat_mean=mean(fwd_iats),
        fwd_iat_std=pstdev(fwd_iats),
        fwd_iat_max=max(fwd_iats) if fwd_iats else 0,
        fwd_iat_min=min(fwd_iats) if fwd_iats else 0,
        bwd_iat_tot=sum(bwd_iats),
        bwd_iat_mean=mean(bwd_iats),
        bwd_iat_std=pstdev(bwd_iats),
        bwd_iat_max=max(bwd_iats) if bwd_iats else 0,
        bwd_iat_min=min(bwd_iats) if bwd_iats else 0,
        flow_iat_tot=sum(flow_iats),
        flow_iat_mean=mean(flow_iats),
        flow_iat_std=pstdev(flow_iats),
        flow_iat_max=max(flow_iats) if flow_iats else 0,
        flow_iat_min=min(flow_iats) if flow_iats else 0,
        flow_pkts_s=len(packets) / rate_seconds,
        flow_byts_s=(total_fwd_bytes + total_bwd_bytes) / rate_seconds,
        down_up_ratio=n_bwd / n_fwd if n_fwd else 0.0,
        subflow_fwd_pkts=sub_f_p,
        subflow_bwd_pkts=sub_b_p,
        subflow_fwd_byts=sub_f_b,
        subflow_bwd_byts=sub_b_b,
        fwd_pkts_b_avg=blk_f_p,
        fwd_byts_b_avg=blk_f_b,
        bwd_pkts_b_avg=blk_b_p,
        bwd_byts_b_avg=blk_b_b,
    )


def subflow_stats(
    packets: Sequence[PacketRecord],
    directions: Sequence[bool],
    idle_gap_ns: int,
) -> tuple[float, float, float, float]:
    """Per-subflow averages: totals divided by 1 + count of gaps > idle_gap."""
    subflows = 1
    for prev, cur in zip(packets, packets[1:]):
        if cur.ts - prev.ts > idle_gap_ns:
            subflows += 1
    fwd_pkts = sum(1 for d in directions if d)
    bwd_pkts = len(packets) - fwd_pkts
    fwd_bytes = sum(p.length for p, d in zip(packets, directions) if d)
    bwd_bytes = sum(p.length for p, d in zip(packets, directions) if not d)
    return (
        fwd_pkts / subflows,
        bwd_pkts / subflows,
        fwd_bytes / subflows,
        bwd_bytes / subflows,
    )


def bulk_stats(
    packets: Sequence[PacketRecord],
    directions: Sequence[bool],
    bulk_min: int,
    bulk_idle_ns: int,
) -> tuple[float, float, float, float]:
    """Average packets/bytes over bulks: maximal same-direction runs of
    >= bulk_min packets whose intra-run gaps stay <= bulk_idle."""
    fwd_bulks: list[tuple[int, int]] = []
    bwd_bulks: list[tuple[int, int]] = []

    run_dir: bool | None = None
    run_pkts = 0
    run_bytes = 0
    last_ts = 0

    def flush() -> None:
        if run_dir is None or run_pkts < bulk_min:
            return
        (fwd_bulks if run_dir else bwd_bulks).append((run_pkts, run_bytes))

    for packet, is_fwd in zip(packets, directions):
        if run_dir is None or is_fwd != run_dir or packet.ts - last_ts > bulk_idle_ns:
            flush()
            run_dir = is_fwd
            run_pkts = 0
            run_bytes = 0
        run_pkts += 1
        run_bytes += packet.length
        last_ts = packet.ts
    flush()

    def avg(bulks: list[tuple[int, int]], idx: int) -> float:
        return sum(b[idx] for b in bulks) / len(bulks) if bulks else 0.0

    return avg(fwd_bulks, 0), avg(fwd_bulks, 1), avg(bwd_bulks, 0), avg(bwd_bulks, 1)


def _iats(ts: Sequence[int]) -> list[int]:
    return [b - a for a, b in zip(ts, ts[1:])]


def write_sessions_csv(records: Sequence[SessionRecord], path) -> int:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SESSION_CSV_FIELDS)
        for r in records:
            row = [r.flow_key.ip_a, r.flow_key.port_a, r.flow_key.ip_b, r.flow_key.port_b,
                   r.flow_key.protocol, r.initiator, r.start_time, r.end_time]
            for name in SESSION_FEATURES:
                value = getattr(r, name)
                row.append(value if name in _INT_FEATURES else f"{value:.6f}")
            writer.writerow(row)
    return len(records)


def read_sessions_csv(path) -> list[SessionRecord]:
    from .packets import SchemaError

    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SESSION_CSV_FIELDS:
            raise SchemaError(f"bad sessions CSV header in {path}")
        for row in reader:
            key = FlowKey(row[0], int(row[1]), row[2], int(row[3]), int(row[4]))
            values: dict[str, float | int] = {}
            for name, cell in zip(SESSION_FEATURES, row[8:]):
                values[name] = int(cell) if name in _INT_FEATURES else float(cell)
            records.append(
                SessionRecord(
                    flow_key=key,
                    initiator=row[5],
                    start_time=int(row[6]),
                    end_time=int(row[7]),
                    **values,
                )
            )
    return records


def directions_from_sessions(
    packets: Sequence[PacketRecord], sessions: Sequence[SessionRecord]
) -> list[bool]:
    """Recover per-packet forward flags from exported session records.

    Each packet is matched to its key's session with the greatest
    start_time <= ts; forward means the packet's source endpoint equals
    that session's initiator.
    """
    by_key: dict[FlowKey, list[tuple[int, str]]] = {}
    for s in sessions:
        by_key.setdefault(s.flow_key, []).append((s.start_time, s.initiator))
    for spans in by_key.values():
        spans.sort()
    flags = []
    for p in packets:
        spans = by_key.get(canonical_key(p))
        if not spans:
            flags.append(True)
            continue
        idx = bisect_right(spans, (p.ts, chr(0x10FFFF))) - 1
        initiator = spans[max(idx, 0)][1]
        flags.append(f"{p.src_ip}:{p.src_port}" == initiator)
    return flags
