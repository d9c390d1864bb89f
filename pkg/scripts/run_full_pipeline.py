#!/usr/bin/env python3
"""Drive the whole CLI pipeline end to end on synthetic inputs.

Generates inputs (if missing), then runs: features -> sentiment ->
causality -> train-vol (with and without sentiment) -> train-classifier ->
report. Training uses reduced epochs so the demo finishes in about a
minute; pass --full for the production defaults.
"""

import argparse
import subprocess
import sys
from pathlib import Path


def run(args: list[str]) -> None:
    print("+", " ".join(args))
    res = subprocess.run(args)
    if res.returncode != 0:
        sys.exit(res.returncode)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="pipeline_demo", help="scratch directory")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--full", action="store_true", help="use production epoch counts")
    args = parser.parse_args()
    work = Path(args.workdir)
    inputs = work / "inputs"
    outputs = work / "outputs"
    outputs.mkdir(parents=True, exist_ok=True)
    py = sys.executable

    if not (inputs / "prices.csv").exists():
        run([py, str(Path(__file__).parent / "generate_synthetic_inputs.py"),
             "--out", str(inputs), "--seed", str(args.seed)])

    cli = [py, "-m", "causalcalib.cli"]
    run(cli + ["features", "--ohlcv", str(inputs / "prices.csv"),
               "--out", str(outputs / "features.csv")])
    run(cli + ["sentiment", "--news", str(inputs / "news.csv"),
               "--calendar", str(inputs / "calendar.csv"),
               "--align", "next", "--out", str(outputs / "daily_sentiment.csv")])
    run(cli + ["causality", "--x", str(outputs / "daily_sentiment.csv"), "--x-column", "score",
               "--y", str(outputs / "features.csv"), "--y-column", "volatility",
               "--max-lag", "10", "--out", str(outputs / "granger.json")])

    epochs_vol = "100" if args.full else "15"
    for use_sent, name in (("false", "vol_baseline"), ("true", "vol_sentiment")):
        cmd = cli + ["train-vol", "--features", str(outputs / "features.csv"),
                     "--use-sentiment", use_sent, "--epochs", epochs_vol,
                     "--seed", str(args.seed), "--out", str(outputs / name)]
        if use_sent == "true":
            cmd += ["--sentiment", str(outputs / "daily_sentiment.csv")]
        run(cmd)

    epochs_clf = "20" if args.full else "8"
    run(cli + ["train-classifier", "--corpus", str(inputs / "corpus.jsonl"),
               "--loss", "fcl", "--gamma", "2", "--lambda", "0.1",
               "--epochs", epochs_clf, "--seed", str(args.seed),
               "--out", str(outputs / "classifier_fcl")])
    run(cli + ["report", "--preds", str(outputs / "classifier_fcl" / "predictions.csv"),
               "--out", str(outputs / "reliability_check.json")])
    print(f"\nall artifacts under {outputs}")


if __name__ == "__main__":
    main()
