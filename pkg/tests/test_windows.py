import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import pkt, sec
from flare.packets import sort_by_time
from flare.windows import (
    directional_ratio_features,
    flow_rate_features,
    generate_windows,
    read_windows_csv,
    shannon_entropy,
    write_windows_csv,
)


def simple_stream(ts_list, **kw):
    packets = sort_by_time([pkt(t, **kw) for t in ts_list])
    return packets, [True] * len(packets)


class TestEntropy:
    def test_single_symbol_is_zero(self):
        assert shannon_entropy(["a"] * 7) == 0.0

    def test_uniform_two_symbols_is_one_bit(self):
        assert shannon_entropy(["a", "a", "b", "b"]) == pytest.approx(1.0)

    def test_three_one_split(self):
        assert shannon_entropy(["a", "a", "a", "b"]) == pytest.approx(0.811278, abs=1e-6)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            shannon_entropy([])

    @given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=64))
    def test_bounds(self, values):
        h = shannon_entropy(values)
        assert -1e-12 <= h <= math.log2(len(set(values))) + 1e-12
        assert h == pytest.approx(oracles.naive_entropy(values), rel=1e-12)


class TestRatiosAndRates:
    def test_plain_division(self):
        assert directional_ratio_features(10, 5, 1000, 500) == (2.0, 2.0)

    def test_zero_backward_clamps_denominator(self):
        pkt_ratio, _ = directional_ratio_features(7, 0, 700, 0)
        assert pkt_ratio == 7.0

    def test_zero_forward_is_zero(self):
        assert directional_ratio_features(0, 4, 0, 400) == (0.0, 0.0)

    def test_rates_use_window_width(self):
        assert flow_rate_features(50, 5000, sec(5)) == (10.0, 1000.0)
        assert flow_rate_features(1, 100, sec(5)) == (0.2, 20.0)


class TestGenerateWindows:
    def test_sparse_example_matches_brute_force(self):
        # Packets at 0 s and 7 s, window 5 s, step 1 s: the brute-force scan
        # of the grid emits starts {0, 3, 4, 5, 6, 7} s (1 s and 2 s are empty).
        packets, dirs = simple_stream([0, sec(7)])
        windows = generate_windows(packets, dirs, sec(5), sec(1))
        brute = oracles.all_windows(packets, dirs, sec(5), sec(1))
        assert [w.start_time for w in windows] == [b["start_time"] for b in brute]
        assert [w.start_time for w in windows] == [0, sec(3), sec(4), sec(5), sec(6), sec(7)]

    def test_single_packet_single_window(self):
        packets, dirs = simple_stream([0])
        windows = generate_windows(packets, dirs, sec(5), sec(1))
        assert len(windows) == 1 and windows[0].start_time == 0

    def test_dense_trace_count_law(self):
        # 10 packets per second for 30 s: every grid start is nonempty.
        ts = [int(i * 1e8) for i in range(301)]
        packets, dirs = simple_stream(ts)
        for step_s in (1, 3):
            windows = generate_windows(packets, dirs, sec(5), sec(step_s))
            span = packets[-1].ts - packets[0].ts
            assert len(windows) == span // sec(step_s) + 1

    def test_window_width_is_exact(self):
        packets, dirs = simple_stream([0, sec(2), sec(9)])
        for w in generate_windows(packets, dirs, sec(5), sec(1)):
            assert w.end_time - w.start_time == sec(5)
            assert w.packet_count_window >= 1

    def test_empty_input(self):
        assert generate_windows([], [], sec(5), sec(1)) == []

    def test_bad_step_rejected(self):
        packets, dirs = simple_stream([0])
        with pytest.raises(ValueError):
            generate_windows(packets, dirs, sec(5), 0)
        with pytest.raises(ValueError):
            generate_windows(packets, dirs, sec(1), sec(5))

    def test_monotone_count_in_step(self):
        ts = [int(i * 3.7e8) for i in range(100)]
        packets, dirs = simple_stream(ts)
        counts = [
            len(generate_windows(packets, dirs, sec(6), sec(s))) for s in (1, 2, 3, 6)
        ]
        assert counts == sorted(counts, reverse=True)

    def test_workers_do_not_change_output(self):
        ts = [int(i * 2.3e8) for i in range(200)]
        packets, dirs = simple_stream(ts)
        a = generate_windows(packets, dirs, sec(5), sec(1), workers=1)
        b = generate_windows(packets, dirs, sec(5), sec(1), workers=4)
        assert a == b


class TestWindowFeatures:
    def test_iat_example(self):
        packets, dirs = simple_stream([0, sec(1), sec(3)])
        (w,) = generate_windows(packets, dirs, sec(5), sec(5))
        assert w.mean_iat_fwd_window == pytest.approx(1.5e9)
        assert w.stddev_iat_fwd_window == pytest.approx(0.5e9)

    def test_single_packet_window_zeroes(self):
        packets, dirs = simple_stream([0])
        (w,) = generate_windows(packets, dirs, sec(5), sec(5))
        assert w.flow_duration_window == 0
        assert w.mean_iat_fwd_window == 0.0 and w.stddev_iat_bwd_window == 0.0

    def test_avg_fwd_size(self):
        packets = [pkt(0, length=100), pkt(sec(1), length=60)]
        (w,) = generate_windows(packets, [True, True], sec(5), sec(5))
        assert w.avg_pkt_size_fwd_window == pytest.approx(80.0)

    def test_flood_entropy_below_spread_sources(self):
        flood = [pkt(i * 10_000, src=f"10.0.0.9") for i in range(40)]
        spread = [pkt(i * 10_000, src=f"10.0.0.{i % 4}") for i in range(40)]
        (wf,) = generate_windows(flood, [True] * 40, sec(5), sec(5))
        (ws,) = generate_windows(spread, [True] * 40, sec(5), sec(5))
        assert wf.entropy_src_ip < ws.entropy_src_ip

    def test_packet_overlap_count_consistency(self):
        # Summing per-packet window memberships must reproduce the summed
        # packet counts of the emitted windows.
        ts = [0, sec(1), sec(2), sec(4), sec(7), sec(7), sec(9)]
        packets, dirs = simple_stream(ts)
        windows = generate_windows(packets, dirs, sec(4), sec(2))
        memberships = sum(
            sum(1 for w in windows if w.start_time <= p.ts < w.end_time) for p in packets
        )
        assert memberships == sum(w.packet_count_window for w in windows)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.integers(0, sec(40)),
            st.sampled_from(["10.0.0.1", "10.0.0.2", "10.0.0.3"]),
            st.booleans(),
            st.integers(20, 900),
        ),
        min_size=1,
        max_size=150,
    ),
    st.integers(1, 8),
    st.integers(1, 8),
)
def test_oracle_equivalence(raw, window_s, step_mul):
    window_ns = sec(window_s)
    step_ns = max(window_ns // step_mul, 1)
    entries = sorted(raw, key=lambda e: e[0])
    packets = [pkt(t, src=ip, length=ln) for t, ip, _, ln in entries]
    dirs = [d for _, _, d, _ in entries]
    mine = generate_windows(packets, dirs, window_ns, step_ns)
    theirs = oracles.all_windows(packets, dirs, window_ns, step_ns)
    assert len(mine) == len(theirs)
    for w, expected in zip(mine, theirs):
        for name, want in expected.items():
            got = getattr(w, name)
            if isinstance(want, int) and isinstance(got, int):
                assert got == want, name
            else:
                assert got == pytest.approx(want, rel=1e-9, abs=1e-12), name


def test_csv_round_trip(tmp_path):
    packets, dirs = simple_stream([0, sec(1), sec(2), sec(8)])
    windows = generate_windows(packets, dirs, sec(5), sec(1))
    path = tmp_path / "w.csv"
    write_windows_csv(windows, path)
    parsed = read_windows_csv(path)
    assert [w.start_time for w in parsed] == [w.start_time for w in windows]
    for a, b in zip(windows, parsed):
        assert b.entropy_src_ip == pytest.approx(a.entropy_src_ip, abs=1e-6)
        assert b.packet_count_window == a.packet_count_window
