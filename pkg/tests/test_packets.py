import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import packet_records, pkt, sec
from flare.packets import (
    PacketRecord,
    SchemaError,
    parse_packet_csv,
    sort_by_time,
    validate_packet,
    write_packet_csv,
)


def test_csv_row_maps_to_record(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text(
        "ts_ns,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags\n"
        "1000000000,10.0.0.2,10.0.0.1,5000,80,6,100,2\n"
    )
    records, meta = parse_packet_csv(path)
    assert records == [PacketRecord(1_000_000_000, "10.0.0.2", "10.0.0.1", 5000, 80, 6, 100, 2)]
    assert meta.packet_count == 1 and meta.dropped_malformed == 0


def test_out_of_range_port_is_skipped_and_counted(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text(
        "ts_ns,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags\n"
        "1,10.0.0.2,10.0.0.1,70000,80,6,100,0\n"
        "2,10.0.0.2,10.0.0.1,5000,80,6,100,0\n"
    )
    records, meta = parse_packet_csv(path)
    assert len(records) == 1
    assert meta.dropped_malformed == 1
    assert meta.packet_count == len(records) + meta.dropped_malformed


def test_header_only_file_gives_no_records(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("ts_ns,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags\n")
    records, meta = parse_packet_csv(path)
    assert records == [] and meta.packet_count == 0


def test_bad_header_is_fatal(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("time,src,dst\n1,2,3\n")
    with pytest.raises(SchemaError):
        parse_packet_csv(path)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(ts=-1),
        dict(length=-5),
        dict(src_port=-1),
        dict(dst_port=65536),
        dict(protocol=300),
        dict(tcp_flags=2, protocol=17),  # flags on a non-TCP packet
        dict(src_ip="10.0.0"),
        dict(src_ip="10.0.0.256"),
    ],
)
def test_validate_packet_rejects(kwargs):
    base = dict(ts=0, src_ip="10.0.0.1", dst_ip="10.0.0.2", src_port=1, dst_port=2,
                protocol=6, length=0, tcp_flags=0)
    base.update(kwargs)
    assert validate_packet(**base) is None


def test_sort_by_time_orders_and_is_stable():
    a, b, c = pkt(sec(3)), pkt(sec(1)), pkt(sec(2))
    assert [p.ts for p in sort_by_time([a, b, c])] == [sec(1), sec(2), sec(3)]
    x = pkt(sec(5), sport=1)
    y = pkt(sec(5), sport=2)
    assert sort_by_time([x, y]) == [x, y]
    already = [pkt(sec(1)), pkt(sec(2))]
    assert sort_by_time(already) == already


@settings(max_examples=50)
@given(st.lists(packet_records, max_size=60))
def test_csv_round_trip(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("csv") / "round.csv"
    write_packet_csv(records, path)
    parsed, meta = parse_packet_csv(path)
    assert parsed == records
    assert meta.dropped_malformed == 0
