"""Deterministic synthetic IoT traffic with injected flood attacks.

Benign traffic is a blend of request/response exchanges and periodic
one-way media bursts per device; every third device streams bursts so
volumetric benign traffic exists alongside the floods. The four attack
shapes are SYN-only floods, FIN+PSH+URG (xmas) scans, fixed-size UDP
floods to random ports, and HTTP request bursts preceded by client-side
handshake packets. All randomness flows from one splitmix64 stream per
(seed, device/attack, purpose), so a profile generates byte-identical
output on any platform. Timestamps are microsecond-aligned so the pcap
round trip is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .merge import TruthInterval
from .packets import ACK, FIN, PSH, PROTO_TCP, PROTO_UDP, SYN, URG, PacketRecord, sort_by_time
from .units import NS_PER_S, NS_PER_US

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

GATEWAY_IP = "192.168.1.1"

ATTACK_TYPES = {
    "tcp_syn": "TCP SYN Flood",
    "udp": "UDP Flood",
    "xmas": "XMas Tree Flood",
    "http": "HTTP Flood",
}


def _mix64(x: int) -> int:
    x &= _MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK
    x ^= x >> 31
    return x


def _fnv1a(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode():
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


class StreamRng:
    """Counter-based splitmix64 generator keyed by (seed, *stream labels)."""

    def __init__(self, seed: int, *streams):
        state = _mix64(seed)
        for s in streams:
            token = _fnv1a(s) if isinstance(s, str) else int(s)
            state = _mix64(state ^ token)
        self._state = state

    def u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix64(self._state)

    def uniform(self) -> float:
        return (self.u64() >> 11) / float(1 << 53)

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.u64() % (hi - lo + 1)


@dataclass(frozen=True, slots=True)
class AttackSpec:
    type: str        # key of ATTACK_TYPES
    target: int      # device index
    start_s: float
    length_s: float
    rate: float      # packets per second


@dataclass(slots=True)
class TrafficProfile:
    device_count: int
    benign_rate: float   # packets per second per device
    duration_s: float
    seed: int
    attacks: list[AttackSpec] = field(default_factory=list)


def device_ip(index: int) -> str:
    return f"192.168.1.{10 + index}"


def _attacker_ip(index: int) -> str:
    return f"203.0.113.{10 + index}"


def _us_align(ts) -> int:
    return (int(ts) // NS_PER_US) * NS_PER_US


def generate(profile: TrafficProfile) -> tuple[list[PacketRecord], list[TruthInterval]]:
    """Produce the time-sorted packet list and one truth interval per attack."""
    _validate(profile)
    duration_ns = int(profile.duration_s * NS_PER_S)
    packets: list[PacketRecord] = []
    for dev in range(profile.device_count):
        packets.extend(_benign_device(profile, dev, duration_ns))
    truth: list[TruthInterval] = []
    for i, spec in enumerate(profile.attacks):
        attack_packets = _attack(profile, i, spec)
        packets.extend(attack_packets)
        truth.append(_interval(i, spec, attack_packets))
    return sort_by_time(packets), truth


def _validate(profile: TrafficProfile) -> None:
    if profile.device_count < 1 or profile.duration_s <= 0 or profile.benign_rate < 0:
        raise ValueError("profile needs >= 1 device, positive duration, nonnegative rate")
    for spec in profile.attacks:
        if spec.type not in ATTACK_TYPES:
            raise ValueError(f"unknown attack type: {spec.type}")
        if not (0 <= spec.target < profile.device_count):
            raise ValueError(f"attack target {spec.target} out of range")
        if spec.start_s < 0 or spec.length_s <= 0 or spec.rate <= 0:
            raise ValueError("attack start/length/rate must be nonnegative/positive")
        if spec.start_s + spec.length_s > profile.duration_s:
            raise ValueError("attack window extends past the capture duration")


def _jittered_gaps(rng: StreamRng, event_rate: float, duration_ns: int):
    """Arrival times with mean spacing 1/rate and +-50% jitter per gap."""
    if event_rate <= 0:
        return
    mean_gap = NS_PER_S / event_rate
    t = mean_gap * rng.uniform()
    while t < duration_ns:
        yield int(t)
        t += mean_gap * (0.5 + rng.uniform())


def _benign_device(profile: TrafficProfile, dev: int, duration_ns: int) -> list[PacketRecord]:
    """Event-mixed benign stream: telemetry exchanges with occasional TCP
    reconnects, DNS-style lookups, plain-HTTP fetches, and (for every third
    device) fixed-size media bursts to ephemeral ports. Events are paced so
    each one's packet count is amortized at the device's benign rate."""
    ip = device_ip(dev)
    rng = StreamRng(profile.seed, "benign", dev)
    packets: list[PacketRecord] = []
    streams_media = dev % 3 == 0
    telemetry_port = 40000 + dev

    if profile.benign_rate <= 0:
        return packets

    def ms(lo: int, hi: int) -> int:
        return rng.randint(lo, hi) * NS_PER_US * 10  # 10 us granularity

    def tcp(t, a, b, pa, pb, length, flags):
        packets.append(PacketRecord(_us_align(t), a, b, pa, pb, PROTO_TCP, length, flags))

    def udp(t, a, b, pa, pb, length):
        packets.append(PacketRecord(_us_align(t), a, b, pa, pb, PROTO_UDP, length, 0))

    t = rng.uniform() * 2.0 / profile.benign_rate * NS_PER_S
    while True:
        roll = rng.uniform()
        before = len(packets)
        latency = ms(100, 2000)  # 1-20 ms
        if streams_media and roll < 0.30:
            # RTP-like burst; P2P streams use arbitrary ephemeral ports.
            sport = rng.randint(49152, 65535)
            dport = rng.randint(1024, 65535)
            step = t
            for _ in range(10):
                udp(step, ip, GATEWAY_IP, sport, dport, 512)
                step += ms(500, 1500)  # 5-15 ms spacing
        elif roll < (0.65 if streams_media else 0.50):
            if rng.uniform() < 0.08:  # periodic reconnect
                tcp(t, ip, GATEWAY_IP, telemetry_port, 8883, 60, SYN)
                tcp(t + latency, GATEWAY_IP, ip, 8883, telemetry_port, 60, SYN | ACK)
                tcp(t + 2 * latency, ip, GATEWAY_IP, telemetry_port, 8883, 40, ACK)
                t += 2 * latency
            tcp(t + ms(50, 500), ip, GATEWAY_IP, telemetry_port, 8883,
                rng.randint(60, 180), PSH | ACK)
            tcp(t + ms(50, 500) + latency, GATEWAY_IP, ip, 8883, telemetry_port,
                rng.randint(40, 80), ACK)
        elif roll < (0.80 if streams_media else 0.75):
            sport = rng.randint(49152, 65535)
            udp(t, ip, GATEWAY_IP, sport, 53, rng.randint(60, 90))
            udp(t + latency, GATEWAY_IP, ip, 53, sport, rng.randint(80, 200))
        else:
            # Plain-HTTP fetch: handshake, request, response, FIN exchange.
            sport = rng.randint(49152, 65535)
            tcp(t, ip, GATEWAY_IP, sport, 80, 60, SYN)
            tcp(t + latency, GATEWAY_IP, ip, 80, sport, 60, SYN | ACK)
            tcp(t + 2 * latency, ip, GATEWAY_IP, sport, 80, 40, ACK)
            tcp(t + 3 * latency, ip, GATEWAY_IP, sport, 80, rng.randint(150, 350), PSH | ACK)
            tcp(t + 4 * latency, GATEWAY_IP, ip, 80, sport, rng.randint(200, 600), PSH | ACK)
            tcp(t + 5 * latency, ip, GATEWAY_IP, sport, 80, 40, FIN | ACK)
            tcp(t + 5 * latency + ms(50, 300), GATEWAY_IP, ip, 80, sport, 40, FIN | ACK)
        emitted = len(packets) - before
        t += emitted / profile.benign_rate * NS_PER_S * (0.5 + rng.uniform())
        if t >= duration_ns:
            break
    return [p for p in packets if p.ts < duration_ns]


def _attack(profile: TrafficProfile, index: int, spec: AttackSpec) -> list[PacketRecord]:
    rng = StreamRng(profile.seed, "attack", index)
    attacker = _attacker_ip(index)
    target = device_ip(spec.target)
    start_ns = int(spec.start_s * NS_PER_S)
    length_ns = int(spec.length_s * NS_PER_S)
    n = int(spec.rate * spec.length_s)
    packets: list[PacketRecord] = []

    if spec.type == "http":
        # Client side of repeated request connections: handshake then a PSH burst.
        per_conn = 6
        conns = max(n // per_conn, 1)
        conn_period = length_ns // conns
        for c in range(conns):
            t = start_ns + c * conn_period + rng.randint(0, max(conn_period // 2, 1))
            sport = rng.randint(1024, 65535)
            seq = [(SYN, 40), (ACK, 40)]
            seq += [(PSH | ACK, rng.randint(200, 400)) for _ in range(per_conn - 2)]
            for flags, length in seq:
                packets.append(
                    PacketRecord(_us_align(t), attacker, target, sport, 80, PROTO_TCP, length, flags)
                )
                t += rng.randint(1_000_000, 5_000_000)
        return packets

    period = length_ns // max(n, 1)
    for i in range(n):
        jitter = rng.randint(0, max((period * 4) // 5, 1))
        ts = _us_align(start_ns + i * period + jitter)
        if spec.type == "tcp_syn":
            # 60 B: stack-built SYNs carry TCP options; raw xmas probes are bare 40 B.
            sport = rng.randint(1024, 65535)
            packets.append(PacketRecord(ts, attacker, target, sport, 80, PROTO_TCP, 60, SYN))
        elif spec.type == "xmas":
            sport = rng.randint(1024, 65535)
            dport = rng.randint(1, 65535)
            packets.append(
                PacketRecord(ts, attacker, target, sport, dport, PROTO_TCP, 40, FIN | PSH | URG)
            )
        else:  # udp: socket-built datagrams, so ephemeral source ports
            sport = rng.randint(49152, 65535)
            dport = rng.randint(1, 65535)
            packets.append(PacketRecord(ts, attacker, target, sport, dport, PROTO_UDP, 512, 0))
    return packets


def _interval(index: int, spec: AttackSpec, packets: list[PacketRecord]) -> TruthInterval:
    return TruthInterval(
        src_ip=_attacker_ip(index),
        dst_ip=device_ip(spec.target),
        src_port=None,
        dst_port=80 if spec.type in ("tcp_syn", "http") else None,
        protocol=PROTO_UDP if spec.type == "udp" else PROTO_TCP,
        start_ts=min(p.ts for p in packets),
        end_ts=max(p.ts for p in packets),
        label=ATTACK_TYPES[spec.type],
    )


def load_profile(path) -> TrafficProfile:
    with open(path) as fh:
        raw = json.load(fh)
    try:
        attacks = [AttackSpec(**a) for a in raw.get("attacks", [])]
        return TrafficProfile(
            device_count=int(raw["device_count"]),
            benign_rate=float(raw["benign_rate"]),
            duration_s=float(raw["duration_s"]),
            seed=int(raw["seed"]),
            attacks=attacks,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad traffic profile {path}: {exc}") from exc


def save_profile(profile: TrafficProfile, path) -> None:
    payload = {
        "device_count": profile.device_count,
        "benign_rate": profile.benign_rate,
        "duration_s": profile.duration_s,
        "seed": profile.seed,
        "attacks": [
            {"type": a.type, "target": a.target, "start_s": a.start_s,
             "length_s": a.length_s, "rate": a.rate}
            for a in profile.attacks
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def expected_benign_count(profile: TrafficProfile) -> float:
    return profile.device_count * profile.benign_rate * profile.duration_s
