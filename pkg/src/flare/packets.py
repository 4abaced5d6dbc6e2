"""Normalized packet records and the packet CSV interchange format."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

# TCP flag bits (low byte of the flags field).
FIN = 0x01
SYN = 0x02
RST = 0x04
PSH = 0x08
ACK = 0x10
URG = 0x20

PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_UDP = 17

PACKET_CSV_FIELDS = [
    "ts_ns",
    "src_ip",
    "dst_ip",
    "src_port",
    "dst_port",
    "protocol",
    "length",
    "tcp_flags",
]


class FormatError(ValueError):
    """Input file does not conform to its declared format."""


class SchemaError(ValueError):
    """Tabular input does not match the expected column schema."""


@dataclass(frozen=True, slots=True)
class PacketRecord:
    """One captured packet, normalized to IPv4 terms.

    ``ts`` is integer nanoseconds since the Unix epoch, ``length`` the IP
    total length in bytes, ``tcp_flags`` the low flag byte (0 for non-TCP).
    """

    ts: int
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    protocol: int
    length: int
    tcp_flags: int


@dataclass(slots=True)
class CaptureMeta:
    """Per-file ingest accounting: packet_count = emitted + dropped_malformed."""

    packet_count: int = 0
    first_ts: int = 0
    last_ts: int = 0
    dropped_malformed: int = 0


def is_ipv4(text: str) -> bool:
    parts = text.split(".")
    if len(parts) != 4:
        return False
    for part in parts:
        if not part.isdigit() or len(part) > 3:
            return False
        if int(part) > 255:
            return False
    return True


def validate_packet(
    ts: int,
    src_ip: str,
    dst_ip: str,
    src_port: int,
    dst_port: int,
    protocol: int,
    length: int,
    tcp_flags: int,
) -> PacketRecord | None:
    """Build a PacketRecord, or None when any field violates its invariant."""
    if ts < 0 or length < 0:
        return None
    if not (0 <= src_port <= 65535 and 0 <= dst_port <= 65535):
        return None
    if not (0 <= protocol <= 255):
        return None
    if not (0 <= tcp_flags <= 255):
        return None
    if protocol != PROTO_TCP and tcp_flags != 0:
        return None
    if not (is_ipv4(src_ip) and is_ipv4(dst_ip)):
        return None
    return PacketRecord(ts, src_ip, dst_ip, src_port, dst_port, protocol, length, tcp_flags)


def parse_packet_csv(path) -> tuple[list[PacketRecord], CaptureMeta]:
    """Read the packet CSV format; invalid rows are skipped and counted."""
    meta = CaptureMeta()
    records: list[PacketRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PACKET_CSV_FIELDS:
            raise SchemaError(f"bad packet CSV header in {path}: {header}")
        for row in reader:
            meta.packet_count += 1
            record = None
            if len(row) == len(PACKET_CSV_FIELDS):
                try:
                    record = validate_packet(
                        int(row[0]), row[1], row[2],
                        int(row[3]), int(row[4]), int(row[5]),
                        int(row[6]), int(row[7]),
                    )
                except ValueError:
                    record = None
            if record is None:
                meta.dropped_malformed += 1
                continue
            records.append(record)
    _fill_span(meta, records)
    return records, meta


def write_packet_csv(records: Iterable[PacketRecord], path) -> int:
    """Write records in the packet CSV format; returns the row count."""
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PACKET_CSV_FIELDS)
        for r in records:
            writer.writerow(
                [r.ts, r.src_ip, r.dst_ip, r.src_port, r.dst_port, r.protocol, r.length, r.tcp_flags]
            )
            count += 1
    return count


def sort_by_time(records: Sequence[PacketRecord]) -> list[PacketRecord]:
    """Stable sort by timestamp; equal timestamps keep their input order."""
    return sorted(records, key=lambda r: r.ts)


def _fill_span(meta: CaptureMeta, records: Sequence[PacketRecord]) -> None:
    if records:
        meta.first_ts = min(r.ts for r in records)
        meta.last_ts = max(r.ts for r in records)
