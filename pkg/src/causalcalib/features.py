"""Price-derived features: momentum, percent returns, rolling volatility.

Momentum at time t is the price difference over a lookback of n trading
days. Returns are percentages over a configurable horizon. Volatility is
the rolling sample standard deviation (divisor N-1) of those returns, and
log volatility its natural logarithm where volatility is positive.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError
from .ingest import DatedSeries, PriceBar, _parse_date, _parse_float


@dataclass(frozen=True)
class FeatureConfig:
    """Windows for the derived price features (all in trading days)."""

    momentum_n: int = 14
    return_horizon: int = 1
    vol_window: int = 21

    def validate(self) -> None:
        if self.momentum_n < 1:
            raise InputError("momentum period must be >= 1")
        if self.return_horizon < 1:
            raise InputError("return horizon must be >= 1")
        if self.vol_window < 2:
            raise InputError("volatility window must be >= 2")


@dataclass
class FeatureFrame:
    """Per-date feature columns; None marks warm-up rows with no value."""

    dates: list
    close: list[float]
    return_pct: list[float | None]
    momentum: list[float | None]
    volatility: list[float | None]
    log_volatility: list[float | None]


@dataclass(frozen=True)
class MinMaxScaler:
    """Train-range min-max transform; degenerate ranges map to 0."""

    lo: float
    hi: float

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.hi == self.lo:
            return np.zeros_like(values)
        return (values - self.lo) / (self.hi - self.lo)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return values * (self.hi - self.lo) + self.lo


def momentum(series: Sequence[PriceBar], n: int) -> DatedSeries:
    """Close-price difference over n days: value at t is P_t - P_{t-n}."""
    if n < 1:
        raise InputError("momentum period must be >= 1")
    if len(series) <= n:
        raise InputError(f"need more than {n} rows for momentum, got {len(series)}")
    return [(series[t].date, series[t].close - series[t - n].close) for t in range(n, len(series))]


def returns_pct(series: Sequence[PriceBar], horizon: int = 1) -> DatedSeries:
    """Percent return over the horizon: (P_t / P_{t-h} - 1) * 100."""
    if horizon < 1:
        raise InputError("return horizon must be >= 1")
    if len(series) <= horizon:
        raise InputError(f"need more than {horizon} rows for returns, got {len(series)}")
    out: DatedSeries = []
    for t in range(horizon, len(series)):
        prev = series[t - horizon].close
        if prev <= 0:
            raise InputError(f"non-positive price on {series[t - horizon].date}")
        out.append((series[t].date, (series[t].close / prev - 1.0) * 100.0))
    return out


def rolling_volatility(returns: DatedSeries, window: int) -> DatedSeries:
    """Sample standard deviation of the last `window` returns ending at t."""
    if window < 2:
        raise InputError("volatility window must be >= 2")
    if len(returns) < window:
        raise InputError(f"need at least {window} returns, got {len(returns)}")
    values = np.array([v for _, v in returns], dtype=float)
    out: DatedSeries = []
    for t in range(window - 1, len(values)):
        win = values[t - window + 1 : t + 1]
        out.append((returns[t][0], float(np.std(win, ddof=1))))
    return out


def log_volatility(vol: DatedSeries) -> DatedSeries:
    """Natural log of volatility; zero entries are dropped with a warning."""
    out: DatedSeries = []
    dropped = 0
    for d, v in vol:
        if v < 0:
            raise InputError(f"negative volatility on {d}")
        if v == 0.0:
            dropped += 1
            continue
        out.append((d, math.log(v)))
    if dropped:
        warnings.warn(f"dropped {dropped} zero-volatility entries from log volatility")
    return out


def minmax_fit_transform(
    train: Sequence[float], apply_to: Sequence[float]
) -> tuple[np.ndarray, MinMaxScaler]:
    """Fit lo/hi on the train values only, then scale `apply_to`."""
    if len(train) == 0:
        raise InputError("cannot fit a scaler on an empty train set")
    arr = np.asarray(train, dtype=float)
    scaler = MinMaxScaler(lo=float(arr.min()), hi=float(arr.max()))
    return scaler.transform(np.asarray(apply_to, dtype=float)), scaler


def build_feature_frame(series: Sequence[PriceBar], cfg: FeatureConfig) -> FeatureFrame:
    """Assemble all feature columns over the full date range of the series.

    Leading rows where a window is not yet filled hold None; so do
    log-volatility entries on zero-volatility days.
    """
    cfg.validate()
    needed = max(cfg.momentum_n, cfg.return_horizon + cfg.vol_window - 1)
    if len(series) <= needed:
        raise InputError(f"need more than {needed} rows for these windows, got {len(series)}")
    n = len(series)
    dates = [b.date for b in series]
    close = [b.close for b in series]

    ret = returns_pct(series, cfg.return_horizon)
    mom = momentum(series, cfg.momentum_n)
    vol = rolling_volatility(ret, cfg.vol_window)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        logvol = dict(log_volatility(vol))

    ret_col: list[float | None] = [None] * n
    mom_col: list[float | None] = [None] * n
    vol_col: list[float | None] = [None] * n
    log_col: list[float | None] = [None] * n
    index = {d: i for i, d in enumerate(dates)}
    for d, v in ret:
        ret_col[index[d]] = v
    for d, v in mom:
        mom_col[index[d]] = v
    for d, v in vol:
        vol_col[index[d]] = v
        if d in logvol:
            log_col[index[d]] = logvol[d]
    return FeatureFrame(dates, close, ret_col, mom_col, vol_col, log_col)


def write_feature_csv(path: str | Path, frame: FeatureFrame) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "close", "return_pct", "momentum", "volatility", "log_volatility"])
        cols = (frame.close, frame.return_pct, frame.momentum, frame.volatility, frame.log_volatility)
        for i, d in enumerate(frame.dates):
            row = [d.isoformat()]
            for col in cols:
                v = col[i]
                row.append("" if v is None else repr(float(v)))
            writer.writerow(row)


def read_feature_csv(path: str | Path) -> FeatureFrame:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    header_expected = ["date", "close", "return_pct", "momentum", "volatility", "log_volatility"]
    frame = FeatureFrame([], [], [], [], [], [])
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != header_expected:
            raise InputError(f"bad header in {path}: expected {','.join(header_expected)}")
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise InputError(f"malformed row (line {line}) in {path}")
            frame.dates.append(_parse_date(row[0], line))
            frame.close.append(_parse_float(row[1], "close", line))
            for col, text, name in (
                (frame.return_pct, row[2], "return_pct"),
                (frame.momentum, row[3], "momentum"),
                (frame.volatility, row[4], "volatility"),
                (frame.log_volatility, row[5], "log_volatility"),
            ):
                col.append(None if not text.strip() else _parse_float(text, name, line))
    return frame
