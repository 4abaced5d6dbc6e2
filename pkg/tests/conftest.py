import sys
from pathlib import Path

from hypothesis import strategies as st

from flare.packets import PacketRecord

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable


def pkt(ts, src="10.0.0.1", dst="10.0.0.2", sport=1000, dport=80,
        proto=6, length=100, flags=0):
    """Shorthand packet builder; ts in nanoseconds."""
    return PacketRecord(ts, src, dst, sport, dport, proto, length, flags)


def sec(x) -> int:
    return int(x * 1_000_000_000)


ips = st.sampled_from(["10.0.0.1", "10.0.0.2", "10.0.0.3", "192.168.1.9"])

packet_records = st.builds(
    PacketRecord,
    ts=st.integers(min_value=0, max_value=sec(100)),
    src_ip=ips,
    dst_ip=ips,
    src_port=st.integers(0, 65535),
    dst_port=st.integers(0, 65535),
    protocol=st.sampled_from([1, 6, 17, 47]),
    length=st.integers(0, 2000),
    tcp_flags=st.just(0),
).map(
    lambda p: p
    if p.protocol == 6
    else PacketRecord(p.ts, p.src_ip, p.dst_ip, p.src_port, p.dst_port, p.protocol, p.length, 0)
)


def tcpish(p: PacketRecord, flags: int) -> PacketRecord:
    return PacketRecord(
        p.ts, p.src_ip, p.dst_ip, p.src_port, p.dst_port, p.protocol, p.length,
        flags if p.protocol == 6 else 0,
    )
