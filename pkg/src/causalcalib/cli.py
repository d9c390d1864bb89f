"""Command-line front end for the full pipeline.

Subcommands mirror the pipeline stages: ``features`` and ``sentiment``
prepare the inputs, ``causality`` screens the sentiment series against the
target, ``train-vol`` and ``train-classifier`` fit the two models, and
``report`` recomputes calibration metrics from a prediction dump.

Exit codes: 0 success, 1 internal or numeric failure, 2 usage or data
validation error. Machine-readable output goes to files; stdout carries
human-readable progress only. Training run directories always contain a
``config.json`` with the resolved configuration, seed, and PRNG identifier,
which is sufficient to reproduce the run bit-exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import causality, features, ingest, metrics, sentiment
from .errors import InputError, NumericError
from .losses import LossConfig, LossKind, PredictionBatch
from .models import dan3, vol_lstm
from .rng import PRNG_ID
from .serialize import format_float, write_report_json

log = logging.getLogger("causalcalib")


def _write_config_json(out_dir: Path, config: dict) -> None:
    payload = {"prng": PRNG_ID, **config}
    with open(out_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def cmd_features(args: argparse.Namespace) -> int:
    cfg = features.FeatureConfig(
        momentum_n=args.momentum_n,
        return_horizon=args.return_horizon,
        vol_window=args.vol_window,
    )
    cfg.validate()
    bars = ingest.read_price_csv(args.ohlcv)
    frame = features.build_feature_frame(bars, cfg)
    features.write_feature_csv(args.out, frame)
    print(f"wrote {len(frame.dates)} feature rows to {args.out}")
    return 0


def cmd_sentiment(args: argparse.Namespace) -> int:
    records = ingest.read_sentiment_file(args.news)
    calendar = ingest.read_calendar_csv(args.calendar)
    policy = {
        "next": ingest.AlignmentPolicy.NEXT_TRADING_DAY,
        "prev": ingest.AlignmentPolicy.PREVIOUS_TRADING_DAY,
        "drop": ingest.AlignmentPolicy.DROP,
    }[args.align]
    aligned = ingest.align_dates(records, calendar, policy)
    if args.dump_records:
        with open(args.dump_records, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "p_neg", "p_neu", "p_pos", "score"])
            for rec in aligned:
                writer.writerow(
                    [
                        rec.date.isoformat(),
                        repr(rec.p_neg),
                        repr(rec.p_neu),
                        repr(rec.p_pos),
                        repr(sentiment.record_score(rec)),
                    ]
                )
    daily = sentiment.aggregate_daily(aligned)
    sentiment.write_daily_csv(args.out, daily)
    if not daily:
        log.warning("no sentiment records; wrote header-only output")
    print(f"wrote {len(daily)} daily sentiment rows to {args.out}")
    return 0


def cmd_causality(args: argparse.Namespace) -> int:
    x_series = ingest.read_dated_column(args.x, args.x_column)
    y_series = ingest.read_dated_column(args.y, args.y_column)
    x_map = dict(x_series)
    common = [d for d, _ in y_series if d in x_map]
    if len(common) != len(y_series) or len(common) != len(x_series):
        log.warning(
            "date join: keeping %d common dates of %d (x) / %d (y)",
            len(common),
            len(x_series),
            len(y_series),
        )
    y_map = dict(y_series)
    x = np.array([x_map[d] for d in common])
    y = np.array([y_map[d] for d in common])
    if np.array_equal(x, y):
        raise InputError("x and y series are identical: perfect collinearity")
    threads = int(os.environ.get("CAUSAL_CALIB_THREADS", "1") or "1")
    report = causality.granger_sweep(y, x, max_lag=args.max_lag, alpha=args.alpha, threads=threads)
    write_report_json(args.out, causality.report_to_dict(report))
    print(f"case: {report.case.value}; report written to {args.out}")
    return 0


def _load_vol_table(args: argparse.Namespace) -> vol_lstm.VolTable:
    target_series = ingest.read_dated_column(args.features, args.target)
    if not target_series:
        raise InputError(f"no usable rows in {args.features}")
    if args.use_sentiment:
        if not args.sentiment:
            raise InputError("--use-sentiment true requires --sentiment PATH")
        sent = {r.date: r.score for r in sentiment.read_daily_csv(args.sentiment)}
        joined = [(d, v, sent[d]) for d, v in target_series if d in sent]
        if len(joined) < len(target_series):
            log.warning(
                "sentiment join: keeping %d of %d target rows", len(joined), len(target_series)
            )
        if not joined:
            raise InputError("no common dates between features and sentiment")
        dates = [d for d, _, _ in joined]
        return vol_lstm.VolTable(
            dates=dates,
            target=np.array([v for _, v, _ in joined]),
            sentiment=np.array([s for _, _, s in joined]),
        )
    return vol_lstm.VolTable(
        dates=[d for d, _ in target_series],
        target=np.array([v for _, v in target_series]),
    )


def cmd_train_vol(args: argparse.Namespace) -> int:
    table = _load_vol_table(args)
    cfg = vol_lstm.VolLstmConfig(
        timesteps=args.timesteps,
        input_dim=2 if args.use_sentiment else 1,
        hidden=args.hidden,
        dropout_rate=args.dropout,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
        train_fraction=args.train_fraction,
    )
    cfg.validate()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config_json(
        out_dir,
        {"command": "train-vol", "target_column": args.target, "seed": args.seed, "config": cfg.__dict__},
    )
    model, train_log = vol_lstm.train_vol_lstm(table, cfg)
    vol_lstm.save_checkpoint(out_dir / "checkpoint.json", model)
    with open(out_dir / "training_log.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss_scaled", "train_mse"])
        for row in train_log:
            writer.writerow([row.epoch, format_float(row.train_loss_scaled), format_float(row.train_mse)])
    dates, actual, predicted = vol_lstm.predict_vol(model, table)
    n_train = model.n_train_samples
    with open(out_dir / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "actual", "predicted"])
        for d, a, p in zip(dates, actual, predicted):
            writer.writerow([d.isoformat(), repr(float(a)), repr(float(p))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        test_metrics = metrics.regression_metrics(actual[n_train:], predicted[n_train:])
    write_report_json(
        out_dir / "metrics.json",
        {
            "seed": cfg.seed,
            "prng": PRNG_ID,
            "n_train": n_train,
            "n_test": int(len(actual) - n_train),
            "final_train_mse": model.final_train_mse,
            "test": test_metrics,
        },
    )
    print(f"test MSE {test_metrics['mse']:.6g}; run directory {out_dir}")
    return 0


def cmd_train_classifier(args: argparse.Namespace) -> int:
    kind = LossKind(args.loss)
    if kind is not LossKind.FCL and args.lam != 0.0:
        log.warning("lambda ignored for %s", kind.value)
    if kind is LossKind.CE and args.gamma != 0.0:
        log.warning("gamma ignored for ce")
    loss_cfg = LossConfig(
        kind=kind,
        gamma=args.gamma if kind is not LossKind.CE else 0.0,
        lam=args.lam if kind is LossKind.FCL else 0.0,
    )
    cfg = dan3.Dan3Config(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        max_seq_len=args.max_seq_len,
        loss=loss_cfg,
        seed=args.seed,
        embedding_path=args.embedding,
    )
    cfg.validate()
    corpus = ingest.read_corpus_jsonl(args.corpus)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_dict = dict(cfg.__dict__)
    cfg_dict["hidden_dims"] = list(cfg.hidden_dims)
    cfg_dict["loss"] = {"kind": kind.value, "gamma": loss_cfg.gamma, "lam": loss_cfg.lam}
    _write_config_json(
        out_dir, {"command": "train-classifier", "seed": args.seed, "config": cfg_dict}
    )
    model, train_log = dan3.train_dan3(corpus, cfg)
    dan3.save_checkpoint(out_dir / "checkpoint.json", model)
    with open(out_dir / "training_log.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split", "loss", "accuracy"])
        for row in train_log:
            writer.writerow([row.epoch, row.split, format_float(row.loss), format_float(row.accuracy)])
    test_docs = [corpus[i] for i in model.split.test_indices]
    ev = dan3.evaluate_classifier(model, test_docs, m=args.bins)
    _write_predictions_csv(out_dir / "predictions.csv", ev.batch, model.labels)
    metrics.write_reliability_json(out_dir / "reliability.json", ev.bins, ev.brier)
    metrics.write_reliability_csv(out_dir / "reliability.csv", ev.bins)
    write_report_json(
        out_dir / "metrics.json",
        {
            "seed": cfg.seed,
            "prng": PRNG_ID,
            "loss": kind.value,
            "n_train": int(len(model.split.train_indices)),
            "n_test": int(len(model.split.test_indices)),
            "classification_error_pct": ev.classification_error_pct,
            "ece_pct": ev.ece_pct,
            "mce_pct": ev.mce_pct,
            "brier": ev.brier,
        },
    )
    print(
        f"classification error {ev.classification_error_pct:.2f}%, "
        f"ECE {ev.ece_pct:.2f}%, MCE {ev.mce_pct:.2f}%; run directory {out_dir}"
    )
    return 0


def _write_predictions_csv(path: Path, batch: PredictionBatch, labels: list[str]) -> None:
    n_classes = batch.n_classes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sample_id", "true_label", "pred_label"] + [f"p_{c}" for c in range(n_classes)]
        )
        preds = batch.probs.argmax(axis=1)
        for i in range(batch.n):
            writer.writerow(
                [i, labels[batch.labels[i]], labels[preds[i]]]
                + [repr(float(v)) for v in batch.probs[i]]
            )


def read_predictions_csv(path: str | Path) -> PredictionBatch:
    """Parse a prediction dump back into a batch, revalidating each row.

    Label names are mapped to probability columns from each row's
    pred_label (which must sit on that row's argmax column); names never
    predicted fall back to sorted order over the remaining columns.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["sample_id", "true_label", "pred_label"]:
            raise InputError(f"bad header in {path}")
        prob_cols = header[3:]
        if not prob_cols or prob_cols != [f"p_{c}" for c in range(len(prob_cols))]:
            raise InputError(f"bad probability columns in {path}: {prob_cols}")
        n_classes = len(prob_cols)
        rows: list[list[float]] = []
        true_texts: list[str] = []
        mapping: dict[str, int] = {}
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3 + n_classes:
                raise InputError(f"malformed row (line {line}) in {path}")
            try:
                probs = [float(v) for v in row[3:]]
            except ValueError as exc:
                raise InputError(f"malformed probability (line {line}) in {path}") from exc
            if any(p < 0.0 or p > 1.0 for p in probs):
                raise InputError(f"probability outside [0, 1] (line {line})")
            if abs(sum(probs) - 1.0) > 1e-6:
                raise InputError(f"probabilities do not sum to 1 (line {line})")
            amax = int(np.argmax(probs))
            pred = row[2]
            if pred in mapping and mapping[pred] != amax:
                raise InputError(
                    f"pred_label {pred!r} maps to columns {mapping[pred]} and {amax} (line {line})"
                )
            mapping[pred] = amax
            rows.append(probs)
            true_texts.append(row[1])
    if not rows:
        raise InputError(f"no prediction rows in {path}")
    leftover_names = sorted(set(true_texts) - mapping.keys())
    leftover_cols = sorted(set(range(n_classes)) - set(mapping.values()))
    if len(leftover_names) > len(leftover_cols):
        raise InputError(
            f"cannot map labels {leftover_names} onto {len(leftover_cols)} free columns"
        )
    mapping.update(zip(leftover_names, leftover_cols))
    return PredictionBatch(
        probs=np.array(rows), labels=np.array([mapping[t] for t in true_texts])
    )


def cmd_report(args: argparse.Namespace) -> int:
    batch = read_predictions_csv(args.preds)
    bins = metrics.reliability(batch, m=args.bins)
    brier_score = metrics.brier(batch)
    metrics.write_reliability_json(args.out, bins, brier_score)
    csv_path = Path(args.out).with_suffix(".csv")
    metrics.write_reliability_csv(csv_path, bins)
    print(f"ece {bins.ece:.4f}, mce {bins.mce:.4f}; wrote {args.out} and {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcalib",
        description="Sentiment-to-volatility causality screening, LSTM forecasting, "
        "and calibrated text classification.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="derive momentum/return/volatility columns from OHLCV")
    p.add_argument("--ohlcv", required=True, help="input price CSV (date,open,high,low,close,volume)")
    p.add_argument("--momentum-n", type=int, default=14, dest="momentum_n", help="momentum lookback in trading days")
    p.add_argument("--vol-window", type=int, default=21, dest="vol_window", help="volatility window in trading days")
    p.add_argument("--return-horizon", type=int, default=1, dest="return_horizon", help="return horizon in trading days")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("sentiment", help="score news probability triples and aggregate per trading day")
    p.add_argument("--news", required=True, help="sentiment CSV/JSONL (date,p_neg,p_neu,p_pos[,text])")
    p.add_argument("--calendar", required=True, help="trading-day calendar CSV (date)")
    p.add_argument("--align", choices=["next", "prev", "drop"], default="next", help="off-calendar date policy")
    p.add_argument("--dump-records", default=None, dest="dump_records", help="debug CSV of per-record scores")
    p.add_argument("--out", required=True, help="output daily sentiment CSV (date,score,count)")
    p.set_defaults(func=cmd_sentiment)

    p = sub.add_parser("causality", help="two-direction Granger sweep with stationarity screening")
    p.add_argument("--x", required=True, help="candidate cause series CSV")
    p.add_argument("--x-column", default=None, dest="x_column", help="column name in --x (default: the only value column)")
    p.add_argument("--y", required=True, help="target series CSV")
    p.add_argument("--y-column", default=None, dest="y_column", help="column name in --y")
    p.add_argument("--max-lag", type=int, default=30, dest="max_lag", help="test lags 1..max-lag")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--out", required=True, help="output granger.json path")
    p.set_defaults(func=cmd_causality)

    p = sub.add_parser("train-vol", help="train the volatility LSTM (optionally sentiment-augmented)")
    p.add_argument("--features", required=True, help="dated CSV containing the target column")
    p.add_argument("--target", default="volatility", help="target column name (volatility or log_volatility)")
    p.add_argument("--use-sentiment", type=_parse_bool, default=False, dest="use_sentiment", help="true/false: add the sentiment feature")
    p.add_argument("--sentiment", default=None, help="daily sentiment CSV (date,score,count)")
    p.add_argument("--timesteps", type=int, default=1, help="window length fed to the LSTM")
    p.add_argument("--hidden", type=int, default=100, help="LSTM units per layer")
    p.add_argument("--dropout", type=float, default=0.5, help="dropout rate after layers 1 and 2")
    p.add_argument("--epochs", type=int, default=100, help="training epochs")
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size", help="minibatch size")
    p.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    p.add_argument("--train-fraction", type=float, default=0.8, dest="train_fraction", help="chronological train share")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_train_vol)

    p = sub.add_parser("train-classifier", help="train the DAN-3 text classifier")
    p.add_argument("--corpus", required=True, help="labeled corpus JSONL")
    p.add_argument("--loss", choices=["ce", "fl", "fcl"], default="fcl", help="training loss")
    p.add_argument("--gamma", type=float, default=2.0, help="focal exponent")
    p.add_argument("--lambda", type=float, default=0.1, dest="lam", help="calibration term weight (fcl only)")
    p.add_argument("--bins", type=int, default=15, help="reliability bin count")
    p.add_argument("--epochs", type=int, default=20, help="training epochs")
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size", help="minibatch size")
    p.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    p.add_argument("--max-seq-len", type=int, default=64, dest="max_seq_len", help="token window per document")
    p.add_argument("--embedding", default=None, help="optional pretrained embedding text file")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("report", help="reliability/calibration report from a prediction dump")
    p.add_argument("--preds", required=True, help="predictions CSV (sample_id,true_label,pred_label,p_0,...)")
    p.add_argument("--bins", type=int, default=15, help="reliability bin count")
    p.add_argument("--out", required=True, help="output reliability JSON path")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
