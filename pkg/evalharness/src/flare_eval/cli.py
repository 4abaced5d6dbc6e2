"""flare-eval entry point: JSON config in, JSON report out.

Two config shapes are accepted:

  {"mode": "train_eval", "dataset": "out/aggregated.csv", "task": "binary",
   "models": ["rf", "ffnn"], "smote": true, "seed": 7}

  {"mode": "compare", "packets": "packets.csv", "truth": "truth.csv",
   "aggregated": "out/aggregated.csv", "model": "lstm", "task": "binary"}

"mode" defaults to train_eval.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import EvalConfig, compare_flare, save_report, train_eval


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="flare-eval", description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        mode = raw.pop("mode", "train_eval")
        if mode == "train_eval":
            report = train_eval(EvalConfig(**raw))
        elif mode == "compare":
            report = compare_flare(
                raw["packets"], raw["truth"], raw["aggregated"],
                model=raw.get("model", "lstm"),
                task=raw.get("task", "binary"),
                seed=raw.get("seed", 0),
                seq_len=raw.get("seq_len", 20),
                epochs=raw.get("epochs", 3),
            )
        else:
            raise ValueError(f"unknown mode: {mode}")
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    save_report(report, args.out)
    summary = report.get("models") or list(report.get("sides", {}).items())
    print(f"report written to {args.out} ({len(summary)} entries)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
