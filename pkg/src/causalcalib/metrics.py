"""Calibration and regression metrics.

Reliability binning uses M equal-width confidence intervals ((m-1)/M, m/M];
a sample lands in the bin containing its top-class probability, with
confidence exactly 0 assigned to the first bin and argmax ties broken
toward the lowest class index. ECE is the count-weighted mean of
|accuracy - confidence| over bins, MCE the maximum over non-empty bins.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .causality import OlsFit
from .errors import InputError
from .losses import PredictionBatch
from .serialize import format_float, to_precision


@dataclass
class BinStat:
    lo: float
    hi: float
    count: int
    acc: float
    conf: float


@dataclass
class ReliabilityBins:
    m: int
    bins: list[BinStat]
    ece: float
    mce: float


def reliability(batch: PredictionBatch, m: int = 15) -> ReliabilityBins:
    """Bin top-class confidences and compare them with accuracy per bin."""
    if m < 1:
        raise InputError("bin count must be >= 1")
    conf = batch.probs.max(axis=1)
    pred = batch.probs.argmax(axis=1)
    correct = (pred == batch.labels).astype(float)
    # ceil(conf * m) - 1 maps (0, 1] onto bins 0..m-1; conf 0 joins bin 0.
    idx = np.clip(np.ceil(conf * m).astype(int) - 1, 0, m - 1)
    n = batch.n
    bins: list[BinStat] = []
    ece = 0.0
    mce = 0.0
    any_nonempty = False
    for b in range(m):
        mask = idx == b
        count = int(mask.sum())
        lo, hi = b / m, (b + 1) / m
        if count == 0:
            bins.append(BinStat(lo=lo, hi=hi, count=0, acc=0.0, conf=0.0))
            continue
        acc = float(correct[mask].mean())
        avg_conf = float(conf[mask].mean())
        gap = abs(acc - avg_conf)
        ece += count / n * gap
        mce = max(mce, gap)
        any_nonempty = True
        bins.append(BinStat(lo=lo, hi=hi, count=count, acc=acc, conf=avg_conf))
    if not any_nonempty:
        raise InputError("reliability: empty batch")
    return ReliabilityBins(m=m, bins=bins, ece=ece, mce=mce)


def brier(batch: PredictionBatch) -> float:
    """Mean squared distance between probability rows and one-hot labels."""
    return float(((batch.probs - batch.one_hot()) ** 2).sum(axis=1).mean())


def regression_metrics(y: np.ndarray, y_hat: np.ndarray) -> dict[str, float | None]:
    """MAE, MSE, RMSE, MAPE (percent), and R^2.

    MAPE is None with a warning when any target is zero; R^2 is None with a
    warning when the targets are constant (zero total sum of squares).
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise InputError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise InputError("empty vectors")
    err = y - y_hat
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err**2))
    rmse = math.sqrt(mse)
    if np.any(y == 0.0):
        warnings.warn("MAPE undefined: target contains zeros")
        mape = None
    else:
        mape = float(np.mean(np.abs(err / y)) * 100.0)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        warnings.warn("R^2 undefined: constant target")
        r2 = None
    else:
        r2 = 1.0 - float(np.sum(err**2)) / sst
    return {"mae": mae, "mse": mse, "rmse": rmse, "mape": mape, "r2": r2}


def information_criteria(fit: OlsFit) -> dict[str, float]:
    """AIC and BIC from the fit's Gaussian log likelihood."""
    aic = 2.0 * fit.n_params - 2.0 * fit.log_likelihood
    bic = math.log(fit.n_obs) * fit.n_params - 2.0 * fit.log_likelihood
    return {"aic": aic, "bic": bic}


def reliability_to_dict(bins: ReliabilityBins, brier_score: float) -> dict:
    return {
        "m": bins.m,
        "ece": bins.ece,
        "mce": bins.mce,
        "brier": brier_score,
        "bins": [
            {"lo": b.lo, "hi": b.hi, "count": b.count, "acc": b.acc, "conf": b.conf}
            for b in bins.bins
        ],
    }


def write_reliability_json(path: str | Path, bins: ReliabilityBins, brier_score: float) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_precision(reliability_to_dict(bins, brier_score)), fh, indent=2)
        fh.write("\n")


def write_reliability_csv(path: str | Path, bins: ReliabilityBins) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lo", "hi", "count", "acc", "conf"])
        for b in bins.bins:
            writer.writerow(
                [format_float(b.lo), format_float(b.hi), b.count, format_float(b.acc), format_float(b.conf)]
            )
