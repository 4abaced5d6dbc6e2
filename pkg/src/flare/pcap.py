"""Classic pcap reading and writing.

Supports both byte orders and both the microsecond (0xa1b2c3d4) and
nanosecond (0xa1b23c4d) magics. Only Ethernet link layers are accepted;
frames that are not IPv4 (one optional 802.1Q tag allowed) are skipped
and counted rather than failing the whole file.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

from .packets import (
    PROTO_TCP,
    PROTO_UDP,
    CaptureMeta,
    FormatError,
    PacketRecord,
    _fill_span,
)
from .units import NS_PER_S, NS_PER_US

_MAGICS = {
    b"\xd4\xc3\xb2\xa1": ("<", NS_PER_US),  # little-endian, microsecond fraction
    b"\xa1\xb2\xc3\xd4": (">", NS_PER_US),
    b"\x4d\x3c\xb2\xa1": ("<", 1),          # little-endian, nanosecond fraction
    b"\xa1\xb2\x3c\x4d": (">", 1),
}

_ETHERTYPE_IPV4 = 0x0800
_ETHERTYPE_VLAN = 0x8100
_LINKTYPE_ETHERNET = 1


def parse_pcap(path) -> tuple[list[PacketRecord], CaptureMeta]:
    """Decode a classic pcap file into PacketRecords plus ingest accounting.

    Raises FormatError on a bad global header; per-packet problems only
    increment ``dropped_malformed``.
    """
    meta = CaptureMeta()
    records: list[PacketRecord] = []
    with open(path, "rb") as fh:
        header = fh.read(24)
        if len(header) < 24:
            raise FormatError(f"{path}: truncated pcap global header")
        try:
            endian, frac_ns = _MAGICS[header[:4]]
        except KeyError:
            raise FormatError(f"{path}: unknown pcap magic {header[:4].hex()}") from None
        _, _, _, _, _, network = struct.unpack(endian + "HHiIII", header[4:])
        if network != _LINKTYPE_ETHERNET:
            raise FormatError(f"{path}: unsupported link type {network} (need Ethernet)")
        rec_fmt = endian + "IIII"
        while True:
            rec_header = fh.read(16)
            if not rec_header:
                break
            if len(rec_header) < 16:
                meta.packet_count += 1
                meta.dropped_malformed += 1
                break
            sec, frac, incl_len, _ = struct.unpack(rec_fmt, rec_header)
            frame = fh.read(incl_len)
            meta.packet_count += 1
            if len(frame) < incl_len:
                meta.dropped_malformed += 1
                break
            record = _decode_frame(frame, sec * NS_PER_S + frac * frac_ns)
            if record is None:
                meta.dropped_malformed += 1
            else:
                records.append(record)
    _fill_span(meta, records)
    return records, meta


def _decode_frame(frame: bytes, ts: int) -> PacketRecord | None:
    if len(frame) < 14:
        return None
    ethertype = struct.unpack(">H", frame[12:14])[0]
    offset = 14
    if ethertype == _ETHERTYPE_VLAN:
        if len(frame) < 18:
            return None
        ethertype = struct.unpack(">H", frame[16:18])[0]
        offset = 18
    if ethertype != _ETHERTYPE_IPV4:
        return None
    if len(frame) < offset + 20:
        return None
    ip = frame[offset:]
    version = ip[0] >> 4
    ihl = (ip[0] & 0x0F) * 4
    if version != 4 or ihl < 20 or len(ip) < ihl:
        return None
    total_length = struct.unpack(">H", ip[2:4])[0]
    protocol = ip[9]
    src_ip = ".".join(str(b) for b in ip[12:16])
    dst_ip = ".".join(str(b) for b in ip[16:20])
    l4 = ip[ihl:]
    src_port = dst_port = 0
    tcp_flags = 0
    if protocol == PROTO_TCP:
        if len(l4) < 14:
            return None
        src_port, dst_port = struct.unpack(">HH", l4[:4])
        tcp_flags = l4[13]
    elif protocol == PROTO_UDP:
        if len(l4) < 4:
            return None
        src_port, dst_port = struct.unpack(">HH", l4[:4])
    return PacketRecord(ts, src_ip, dst_ip, src_port, dst_port, protocol, total_length, tcp_flags)


def write_pcap(records: Iterable[PacketRecord], path) -> int:
    """Write records as a little-endian, microsecond-resolution pcap.

    Timestamps are truncated to microseconds (the format's limit); the
    packet CSV writer keeps full nanoseconds. Returns the packet count.
    """
    count = 0
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, _LINKTYPE_ETHERNET))
        for r in records:
            frame = _encode_frame(r)
            us = r.ts // NS_PER_US
            fh.write(struct.pack("<IIII", us // 1_000_000, us % 1_000_000, len(frame), len(frame)))
            fh.write(frame)
            count += 1
    return count


def _encode_frame(r: PacketRecord) -> bytes:
    l4 = _encode_l4(r)
    header_len = 20 + len(l4)
    if r.length < header_len:
        raise ValueError(f"packet length {r.length} below header size {header_len}")
    payload = bytes(r.length - header_len)
    ip = bytearray(20)
    ip[0] = 0x45
    struct.pack_into(">H", ip, 2, r.length)
    ip[8] = 64
    ip[9] = r.protocol
    ip[12:16] = bytes(int(p) for p in r.src_ip.split("."))
    ip[16:20] = bytes(int(p) for p in r.dst_ip.split("."))
    struct.pack_into(">H", ip, 10, _ip_checksum(ip))
    eth = _mac(r.dst_ip) + _mac(r.src_ip) + struct.pack(">H", _ETHERTYPE_IPV4)
    return eth + bytes(ip) + l4 + payload


def _encode_l4(r: PacketRecord) -> bytes:
    if r.protocol == PROTO_TCP:
        return struct.pack(
            ">HHIIBBHHH", r.src_port, r.dst_port, 0, 0, 5 << 4, r.tcp_flags, 8192, 0, 0
        )
    if r.protocol == PROTO_UDP:
        return struct.pack(">HHHH", r.src_port, r.dst_port, max(r.length - 20, 8), 0)
    return b""


def _mac(ip: str) -> bytes:
    # Locally administered address derived from the IP; only needs to be stable.
    return bytes([0x02, 0x00]) + bytes(int(p) for p in ip.split("."))


def _ip_checksum(header: Sequence[int]) -> int:
    total = 0
    for i in range(0, len(header), 2):
        total += (header[i] << 8) | header[i + 1]
    while total > 0xFFFF:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF
