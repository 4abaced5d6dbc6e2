"""Command line interface and full-pipeline orchestration.

``flare run --config config.json`` executes ingest -> sessions ->
windows -> merge+label -> tune -> reduce, writing every stage output
plus a manifest with row counts, wall times, and sha256 digests. Each
stage is also exposed as its own subcommand. Exit codes: 0 success,
2 configuration/parameter error, 1 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import merge as merge_mod
from . import pcap as pcap_mod
from . import reduce as reduce_mod
from . import synth as synth_mod
from . import tune as tune_mod
from . import windows as windows_mod
from .packets import parse_packet_csv, sort_by_time, write_packet_csv
from .sessions import (
    SessionParams,
    aggregate_sessions,
    directions_from_sessions,
    read_sessions_csv,
    write_sessions_csv,
)
from .units import parse_duration

logger = logging.getLogger("flare")

NON_FEATURE_COLUMNS = {
    "start_time",
    "end_time",
    "session_start_time",
    "session_match",
    "label_binary",
    "label_multi",
}


@dataclass(slots=True)
class PipelineConfig:
    input: str
    format: str = "csv"                 # pcap | csv
    window_size: str = "5s"
    step_size: str = "1s"
    idle_timeout: str = "120s"
    subflow_gap: str = "1s"
    bulk_min: int = 4
    bulk_idle: str = "1s"
    truth: str | None = None
    pca_k: int | None = None
    pca_variance_target: float | None = 0.95
    outdir: str = "out"
    seed: int = 0
    workers: int = 1
    drop_unmatched: bool = True
    tune_candidates: list[str] = field(default_factory=lambda: ["5s", "10s", "20s", "30s"])

    def __post_init__(self):
        if parse_duration(self.step_size) > parse_duration(self.window_size):
            raise ValueError("step_size must not exceed window_size")
        if self.format not in ("pcap", "csv"):
            raise ValueError(f"unknown input format: {self.format}")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            raw = json.load(fh)
        pca = raw.pop("pca", {})
        raw.setdefault("pca_k", pca.get("k"))
        if "variance_target" in pca:
            raw["pca_variance_target"] = pca["variance_target"]
        elif raw.get("pca_k") is not None:
            raw.setdefault("pca_variance_target", None)
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ValueError(f"bad pipeline config {path}: {exc}") from exc


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _session_params(cfg: PipelineConfig) -> SessionParams:
    return SessionParams(
        idle_timeout_ns=parse_duration(cfg.idle_timeout),
        subflow_gap_ns=parse_duration(cfg.subflow_gap),
        bulk_min=cfg.bulk_min,
        bulk_idle_ns=parse_duration(cfg.bulk_idle),
    )


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Execute every stage through its file interface; returns the manifest."""
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"config": dataclasses.asdict(cfg), "stages": []}

    def stage(name: str, fn):
        started = time.perf_counter()
        try:
            rows, outputs = fn()
        except Exception as exc:
            raise StageError(name, exc) from exc
        entry = {
            "stage": name,
            "rows": rows,
            "seconds": round(time.perf_counter() - started, 6),
            "outputs": {p.name: _sha256(p) for p in outputs},
        }
        manifest["stages"].append(entry)
        logger.info("stage %-10s rows=%-8d %.3fs", name, rows, entry["seconds"])

    packets_csv = outdir / "packets.csv"
    sessions_csv = outdir / "sessions.csv"
    windows_csv = outdir / "windows.csv"
    aggregated_csv = outdir / "aggregated.csv"
    tune_csv = outdir / "tune.csv"
    model_json = outdir / "pca_model.json"
    loadings_csv = outdir / "loadings.csv"
    scores_csv = outdir / "pca_scores.csv"

    state: dict = {}

    def ingest():
        if cfg.format == "pcap":
            records, meta = pcap_mod.parse_pcap(cfg.input)
        else:
            records, meta = parse_packet_csv(cfg.input)
        records = sort_by_time(records)
        write_packet_csv(records, packets_csv)
        if meta.dropped_malformed:
            logger.warning("dropped %d malformed packets", meta.dropped_malformed)
        return len(records), [packets_csv]

    stage("ingest", ingest)
    packets, _ = parse_packet_csv(packets_csv)

    def sessions():
        records, directions = aggregate_sessions(packets, _session_params(cfg))
        state["directions"] = directions
        write_sessions_csv(records, sessions_csv)
        return len(records), [sessions_csv]

    stage("sessions", sessions)

    def windows():
        records = windows_mod.generate_windows(
            packets,
            state["directions"],
            parse_duration(cfg.window_size),
            parse_duration(cfg.step_size),
            workers=cfg.workers,
        )
        windows_mod.write_windows_csv(records, windows_csv)
        return len(records), [windows_csv]

    stage("windows", windows)

    def merge():
        window_records = windows_mod.read_windows_csv(windows_csv)
        session_records = read_sessions_csv(sessions_csv)
        merged = merge_mod.asof_merge(window_records, session_records)
        truth = merge_mod.read_truth_csv(cfg.truth) if cfg.truth else []
        merge_mod.apply_labels(merged, truth, packets)
        rows = merge_mod.write_aggregated_csv(merged, aggregated_csv, cfg.drop_unmatched)
        return rows, [aggregated_csv]

    stage("merge", merge)

    def tune():
        session_records = read_sessions_csv(sessions_csv)
        report = tune_mod.select_window(
            session_records, [parse_duration(c) for c in cfg.tune_candidates]
        )
        tune_mod.write_tune_csv(report, tune_csv)
        return len(report.features), [tune_csv]

    stage("tune", tune)

    def reduce():
        names, X, labels = load_feature_matrix(aggregated_csv)
        model = reduce_mod.fit_pca(
            X, feature_names=names, k=cfg.pca_k, variance_target=cfg.pca_variance_target
        )
        reduce_mod.save_model(model, model_json)
        outputs = [model_json, scores_csv]
        if model.n_components >= 3:
            reduce_mod.write_loadings_csv(reduce_mod.contribution_report(model), loadings_csv)
            outputs.append(loadings_csv)
        scores = reduce_mod.transform(model, X)
        write_scores_csv(scores, labels, scores_csv)
        return scores.shape[0], outputs

    stage("reduce", reduce)

    manifest_path = outdir / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


def load_feature_matrix(path) -> tuple[list[str], np.ndarray, list[tuple[str, str]]]:
    """Read aggregated.csv into (feature names, matrix, (binary, multi) labels)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        feature_idx = [
            i for i, name in enumerate(header) if name not in NON_FEATURE_COLUMNS
        ]
        names = [header[i] for i in feature_idx]
        bin_idx = header.index("label_binary") if "label_binary" in header else None
        multi_idx = header.index("label_multi") if "label_multi" in header else None
        rows, labels = [], []
        for row in reader:
            rows.append([float(row[i]) for i in feature_idx])
            labels.append(
                (
                    row[bin_idx] if bin_idx is not None else "",
                    row[multi_idx] if multi_idx is not None else "",
                )
            )
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return names, np.array(rows, dtype=float), labels


def write_scores_csv(scores: np.ndarray, labels, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"pc{i + 1}" for i in range(scores.shape[1])] + ["label_binary", "label_multi"]
        )
        for row, (lb, lm) in zip(scores, labels):
            writer.writerow([f"{v:.6f}" for v in row] + [lb, lm])


def read_scores_csv(path) -> tuple[np.ndarray, list[tuple[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        pc_idx = [i for i, n in enumerate(header) if n.startswith("pc")]
        bin_idx = header.index("label_binary") if "label_binary" in header else None
        multi_idx = header.index("label_multi") if "label_multi" in header else None
        points, labels = [], []
        for row in reader:
            points.append([float(row[i]) for i in pc_idx])
            labels.append(
                (
                    row[bin_idx] if bin_idx is not None else "",
                    row[multi_idx] if multi_idx is not None else "",
                )
            )
    return np.array(points, dtype=float), labels


# ---------------------------------------------------------------- subcommands


def _cmd_ingest(args) -> int:
    if args.format == "pcap":
        records, meta = pcap_mod.parse_pcap(args.input)
    else:
        records, meta = parse_packet_csv(args.input)
    write_packet_csv(sort_by_time(records), args.out)
    print(f"{len(records)} packets written to {args.out} "
          f"({meta.dropped_malformed} malformed dropped)")
    return 0


def _cmd_synth(args) -> int:
    profile = synth_mod.load_profile(args.profile)
    packets, truth = synth_mod.generate(profile)
    if args.out_pcap:
        pcap_mod.write_pcap(packets, args.out_pcap)
    if args.out_csv:
        write_packet_csv(packets, args.out_csv)
    if args.out_truth:
        merge_mod.write_truth_csv(truth, args.out_truth)
    print(f"{len(packets)} packets, {len(truth)} truth intervals")
    return 0


def _cmd_sessions(args) -> int:
    packets, _ = parse_packet_csv(args.infile)
    params = SessionParams(
        idle_timeout_ns=parse_duration(args.idle_timeout),
        subflow_gap_ns=parse_duration(args.subflow_gap),
        bulk_min=args.bulk_min,
        bulk_idle_ns=parse_duration(args.bulk_idle),
    )
    records, _ = aggregate_sessions(sort_by_time(packets), params)
    write_sessions_csv(records, args.out)
    print(f"{len(records)} sessions written to {args.out}")
    return 0


def _cmd_windows(args) -> int:
    packets, _ = parse_packet_csv(args.infile)
    packets = sort_by_time(packets)
    if args.sessions:
        directions = directions_from_sessions(packets, read_sessions_csv(args.sessions))
    else:
        _, directions = aggregate_sessions(packets, SessionParams())
    records = windows_mod.generate_windows(
        packets,
        directions,
        parse_duration(args.window_size),
        parse_duration(args.step_size),
        workers=args.workers,
    )
    windows_mod.write_windows_csv(records, args.out)
    print(f"{len(records)} windows written to {args.out}")
    return 0


def _cmd_merge(args) -> int:
    window_records = windows_mod.read_windows_csv(args.windows)
    session_records = read_sessions_csv(args.sessions)
    merged = merge_mod.asof_merge(window_records, session_records)
    truth = merge_mod.read_truth_csv(args.truth) if args.truth else []
    if truth and not args.packets:
        raise ValueError("labeling against --truth requires --packets")
    if truth:
        packets, _ = parse_packet_csv(args.packets)
        merge_mod.apply_labels(merged, truth, sort_by_time(packets))
    rows = merge_mod.write_aggregated_csv(merged, args.out, not args.keep_unmatched)
    print(f"{rows} aggregated rows written to {args.out}")
    return 0


def _cmd_tune(args) -> int:
    session_records = read_sessions_csv(args.sessions)
    candidates = [parse_duration(c) for c in args.candidates.split(",")]
    features = args.features.split(",") if args.features else None
    report = tune_mod.select_window(session_records, candidates, features)
    tune_mod.write_tune_csv(report, args.out)
    print(f"tuning grid for {len(report.features)} features written to {args.out}")
    return 0


def _cmd_reduce(args) -> int:
    names, X, labels = load_feature_matrix(args.infile)
    model = reduce_mod.fit_pca(
        X, feature_names=names, k=args.components, variance_target=args.variance_target
    )
    if args.model:
        reduce_mod.save_model(model, args.model)
    if args.report:
        reduce_mod.write_loadings_csv(reduce_mod.contribution_report(model), args.report)
    write_scores_csv(reduce_mod.transform(model, X), labels, args.out)
    retained = float(np.sum(model.explained_variance_ratio))
    print(f"{model.n_components} components retain {retained:.4%} of variance -> {args.out}")
    return 0


def _cmd_cluster_quality(args) -> int:
    points, _ = read_scores_csv(args.scores)
    assignments, _, inertia = reduce_mod.kmeans(points, args.k, args.seed)
    score = reduce_mod.silhouette(points, assignments)
    print(f"k={args.k} silhouette={score:.4f} inertia={inertia:.4f}")
    return 0


def _cmd_run(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    if args.outdir:
        cfg.outdir = args.outdir
    if args.workers:
        cfg.workers = args.workers
    manifest = run_pipeline(cfg)
    print(json.dumps({s["stage"]: s["rows"] for s in manifest["stages"]}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flare", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir")
    p.add_argument("--workers", type=int)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("ingest", help="normalize a capture into the packet CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["pcap", "csv"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("synth", help="generate synthetic traffic and truth intervals")
    p.add_argument("--profile", required=True)
    p.add_argument("--out-pcap")
    p.add_argument("--out-csv")
    p.add_argument("--out-truth")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("aggregate-sessions", help="group packets into session records")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--idle-timeout", default="120s")
    p.add_argument("--subflow-gap", default="1s")
    p.add_argument("--bulk-min", type=int, default=4)
    p.add_argument("--bulk-idle", default="1s")
    p.set_defaults(fn=_cmd_sessions)

    p = sub.add_parser("aggregate-windows", help="sliding-window aggregate features")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--sessions", help="session CSV used for per-packet direction lookup")
    p.add_argument("--window-size", default="5s")
    p.add_argument("--step-size", default="1s")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_windows)

    p = sub.add_parser("merge", help="as-of merge windows with sessions and label")
    p.add_argument("--windows", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--truth")
    p.add_argument("--packets", help="packet CSV backing the truth-interval labeling")
    p.add_argument("--keep-unmatched", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_merge)

    p = sub.add_parser("tune-window", help="per-feature MSE grid over window sizes")
    p.add_argument("--sessions", required=True)
    p.add_argument("--candidates", default="5s,10s,20s,30s")
    p.add_argument("--features")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_tune)

    p = sub.add_parser("reduce", help="standardize, fit PCA, export scores and loadings")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--components", type=int)
    p.add_argument("--variance-target", type=float)
    p.add_argument("--model")
    p.add_argument("--report")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_reduce)

    p = sub.add_parser("cluster-quality", help="k-means silhouette on an embedding CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(fn=_cmd_cluster_quality)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
