#!/usr/bin/env python3
"""Window-size study: MSE grid for flow/temporal features on a corpus.

Given a sessions.csv (or nothing, in which case a synthetic corpus is
generated), prints the per-feature MSE for each candidate window size
and the minimizing size, mirroring the tune-window CLI output.
"""

import argparse

from flare.sessions import aggregate_sessions, read_sessions_csv
from flare.synth import AttackSpec, TrafficProfile, generate
from flare.tune import DEFAULT_FEATURES, select_window
from flare.units import format_duration, parse_duration


def synthetic_sessions(seed: int):
    profile = TrafficProfile(
        device_count=3,
        benign_rate=15.0,
        duration_s=300.0,
        seed=seed,
        attacks=[
            AttackSpec("tcp_syn", 0, 40.0, 5.0, 400.0),
            AttackSpec("udp", 1, 120.0, 5.0, 400.0),
            AttackSpec("http", 2, 200.0, 5.0, 300.0),
        ],
    )
    packets, _ = generate(profile)
    records, _ = aggregate_sessions(packets)
    return records


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sessions", help="sessions.csv (omit to use a synthetic corpus)")
    parser.add_argument("--candidates", default="5s,10s,20s,30s")
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    sessions = (
        read_sessions_csv(args.sessions) if args.sessions else synthetic_sessions(args.seed)
    )
    candidates = [parse_duration(c) for c in args.candidates.split(",")]
    report = select_window(sessions, candidates, DEFAULT_FEATURES)

    labels = [format_duration(c) for c in candidates]
    width = max(len(f) for f in report.features) + 2
    print(f"{'feature':<{width}}" + "".join(f"{lbl:>16}" for lbl in labels) + "    best")
    for feature in report.features:
        cells = "".join(f"{report.mse[(feature, c)]:>16.4g}" for c in candidates)
        print(f"{feature:<{width}}{cells}    {format_duration(report.best_window[feature])}")
    print(f"\n({report.note}; {len(sessions)} sessions)")


if __name__ == "__main__":
    main()
