#!/usr/bin/env python3
"""Generate a desk-scale labeled corpus and run the full pipeline on it.

Writes profile.json, cap.pcap, packets.csv, truth.csv and all pipeline
outputs (sessions/windows/aggregated/tune/pca) under --outdir, then
prints the stage summary from the manifest.
"""

import argparse
import json
from pathlib import Path

from flare.cli import PipelineConfig, run_pipeline
from flare.merge import write_truth_csv
from flare.packets import write_packet_csv
from flare.pcap import write_pcap
from flare.synth import AttackSpec, TrafficProfile, generate, save_profile


def demo_profile(seed: int, duration_s: float) -> TrafficProfile:
    attacks = []
    kinds = ["tcp_syn", "udp", "xmas", "http"]
    slot = duration_s / 13
    for i in range(12):  # three executions of each flood, round-robin targets
        attacks.append(
            AttackSpec(
                type=kinds[i % 4],
                target=i % 3,
                start_s=round(slot * (i + 0.5), 3),
                length_s=5.0,
                rate=500.0,
            )
        )
    return TrafficProfile(
        device_count=3, benign_rate=12.0, duration_s=duration_s, seed=seed, attacks=attacks
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="demo_corpus")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--duration", type=float, default=600.0)
    parser.add_argument("--window-size", default="5s")
    parser.add_argument("--step-size", default="1s")
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    profile = demo_profile(args.seed, args.duration)
    save_profile(profile, outdir / "profile.json")
    packets, truth = generate(profile)
    write_pcap(packets, outdir / "cap.pcap")
    write_packet_csv(packets, outdir / "packets.csv")
    write_truth_csv(truth, outdir / "truth.csv")
    print(f"{len(packets)} packets, {len(truth)} truth intervals")

    cfg = PipelineConfig(
        input=str(outdir / "packets.csv"),
        format="csv",
        window_size=args.window_size,
        step_size=args.step_size,
        truth=str(outdir / "truth.csv"),
        outdir=str(outdir / "out"),
        seed=args.seed,
    )
    manifest = run_pipeline(cfg)
    print(json.dumps({s["stage"]: s["rows"] for s in manifest["stages"]}, indent=2))
    labels = {}
    for line in (outdir / "out" / "aggregated.csv").read_text().splitlines()[1:]:
        label = line.rsplit(",", 1)[-1]
        labels[label] = labels.get(label, 0) + 1
    print("label counts:", json.dumps(labels, indent=2))


if __name__ == "__main__":
    main()
