"""Stacked-LSTM one-step-ahead volatility predictor.

Supervised pairs map the features at day t (the target series plus,
optionally, the daily sentiment score) to the target at day t+1. The split
is chronological, min-max scalers are fit on the train rows only, and the
network is three LSTM layers with dropout after the first two followed by
a linear head, trained with squared error and Adam.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InputError, NumericError
from ..features import MinMaxScaler
from ..losses import mse_loss
from ..nn import DenseLayer, LstmLayer, Tensor2D, adam_step, init_adam
from ..rng import PRNG_ID, CounterRng

CHECKPOINT_FORMAT = "vol-lstm-v1"


@dataclass(frozen=True)
class VolLstmConfig:
    timesteps: int = 1
    input_dim: int = 1  # 1 = target only, 2 = target + sentiment
    layers: int = 3
    hidden: int = 100
    dropout_rate: float = 0.5
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0
    train_fraction: float = 0.8

    def validate(self) -> None:
        if self.input_dim not in (1, 2):
            raise InputError("input_dim must be 1 or 2")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise InputError("dropout rate must be in [0, 1)")
        if self.timesteps < 1 or self.layers < 1 or self.hidden < 1:
            raise InputError("timesteps, layers, and hidden must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise InputError("epochs and batch size must be positive")
        if not (0.0 < self.train_fraction < 1.0):
            raise InputError("train_fraction must be in (0, 1)")


@dataclass
class VolTable:
    """Joined daily table: the forecast target and optional sentiment."""

    dates: list[dt.date]
    target: np.ndarray
    sentiment: np.ndarray | None = None

    def validate(self) -> None:
        self.target = np.asarray(self.target, dtype=float)
        if len(self.dates) != len(self.target):
            raise InputError("dates and target lengths disagree")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise InputError(f"table dates must be strictly increasing (saw {b} after {a})")
        bad = np.nonzero(~np.isfinite(self.target))[0]
        if bad.size:
            raise InputError(f"missing/non-finite target value on {self.dates[bad[0]]}")
        if self.sentiment is not None:
            self.sentiment = np.asarray(self.sentiment, dtype=float)
            if len(self.sentiment) != len(self.target):
                raise InputError("sentiment column length disagrees with target")
            bad = np.nonzero(~np.isfinite(self.sentiment))[0]
            if bad.size:
                raise InputError(f"missing/non-finite sentiment value on {self.dates[bad[0]]}")


@dataclass
class EpochLog:
    epoch: int
    train_loss_scaled: float
    train_mse: float


@dataclass
class VolLstmModel:
    config: VolLstmConfig
    lstm_layers: list[LstmLayer]
    head: DenseLayer
    feature_scalers: list[MinMaxScaler]
    target_scaler: MinMaxScaler
    n_train_samples: int = 0
    final_train_mse: float = field(default=math.nan)

    def _forward(
        self, x: np.ndarray, training: bool, rng: CounterRng | None
    ) -> tuple[np.ndarray, list[np.ndarray | None]]:
        """x is (batch, timesteps, input_dim) in scaled space."""
        masks: list[np.ndarray | None] = []
        h = x
        for i, layer in enumerate(self.lstm_layers):
            h = layer.forward_sequence(h)
            if training and i < len(self.lstm_layers) - 1 and self.config.dropout_rate > 0.0:
                keep = rng.uniform(h.shape) >= self.config.dropout_rate
                mask = keep / (1.0 - self.config.dropout_rate)
                h = h * mask
                masks.append(mask)
            else:
                masks.append(None)
        pred = self.head.forward(h[:, -1, :])
        return pred[:, 0], masks

    def _backward(self, grad_pred: np.ndarray, masks: list[np.ndarray | None]) -> list[np.ndarray]:
        grad_last, grad_w_head, grad_b_head = self.head.backward(grad_pred[:, None])
        grads: list[np.ndarray] = []
        batch = grad_last.shape[0]
        steps = self.config.timesteps
        grad_h = np.zeros((batch, steps, self.config.hidden))
        grad_h[:, -1, :] = grad_last
        layer_grads: list[tuple[np.ndarray, np.ndarray]] = []
        for i in range(len(self.lstm_layers) - 1, -1, -1):
            if masks[i] is not None:
                grad_h = grad_h * masks[i]
            grad_h, grad_w, grad_b = self.lstm_layers[i].backward_sequence(grad_h)
            layer_grads.append((grad_w, grad_b))
        for grad_w, grad_b in reversed(layer_grads):
            grads.extend([grad_w, grad_b])
        grads.extend([grad_w_head, grad_b_head])
        return grads

    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for layer in self.lstm_layers:
            out.extend(layer.params())
        out.extend(self.head.params())
        return out

    def predict_scaled(self, x: np.ndarray) -> np.ndarray:
        pred, _ = self._forward(x, training=False, rng=None)
        return pred


def _build_model(cfg: VolLstmConfig, rng: CounterRng) -> tuple[list[LstmLayer], DenseLayer]:
    layers = []
    in_dim = cfg.input_dim
    for _ in range(cfg.layers):
        layers.append(LstmLayer.init(rng, in_dim, cfg.hidden))
        in_dim = cfg.hidden
    head = DenseLayer.init(rng, cfg.hidden, 1)
    return layers, head


def build_supervised(table: VolTable, cfg: VolLstmConfig) -> tuple[np.ndarray, np.ndarray, list[dt.date]]:
    """Windows of length `timesteps` ending at t, target at t+1."""
    table.validate()
    if cfg.input_dim == 2 and table.sentiment is None:
        raise InputError("config expects a sentiment column but the table has none")
    n = len(table.target)
    if n <= cfg.timesteps + 10:
        raise InputError(f"need more than {cfg.timesteps + 10} rows, got {n}")
    cols = [table.target]
    if cfg.input_dim == 2:
        cols.append(table.sentiment)
    values = np.column_stack(cols)
    xs, ys, dates = [], [], []
    for t in range(cfg.timesteps - 1, n - 1):
        xs.append(values[t - cfg.timesteps + 1 : t + 1, :])
        ys.append(table.target[t + 1])
        dates.append(table.dates[t + 1])
    return np.asarray(xs), np.asarray(ys), dates


def _scale_inputs(
    x: np.ndarray, scalers: list[MinMaxScaler]
) -> np.ndarray:
    out = np.empty_like(x)
    for j, scaler in enumerate(scalers):
        out[:, :, j] = scaler.transform(x[:, :, j])
    return out


def train_vol_lstm(table: VolTable, cfg: VolLstmConfig) -> tuple[VolLstmModel, list[EpochLog]]:
    """Train the predictor; deterministic for a given config and seed."""
    cfg.validate()
    x, y, _ = build_supervised(table, cfg)
    n_samples = len(y)
    n_train = int(n_samples * cfg.train_fraction)
    if n_train < 1 or n_train >= n_samples:
        raise InputError(f"train fraction {cfg.train_fraction} leaves an empty split")

    feature_scalers = [
        MinMaxScaler(lo=float(x[:n_train, :, j].min()), hi=float(x[:n_train, :, j].max()))
        for j in range(cfg.input_dim)
    ]
    target_scaler = MinMaxScaler(lo=float(y[:n_train].min()), hi=float(y[:n_train].max()))
    x_scaled = _scale_inputs(x, feature_scalers)
    y_scaled = target_scaler.transform(y)

    rng = CounterRng(cfg.seed)
    lstm_layers, head = _build_model(cfg, rng)
    model = VolLstmModel(
        config=cfg,
        lstm_layers=lstm_layers,
        head=head,
        feature_scalers=feature_scalers,
        target_scaler=target_scaler,
        n_train_samples=n_train,
    )
    params = model.params()
    adam = init_adam(params, lr=cfg.lr)

    x_train, y_train = x_scaled[:n_train], y_scaled[:n_train]
    log: list[EpochLog] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            pred, masks = model._forward(x_train[idx], training=True, rng=rng)
            loss, grad = mse_loss(pred, y_train[idx])
            if not math.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            grads = model._backward(grad, masks)
            adam_step(adam, params, grads)
            batch_losses.append(loss)
        train_pred = target_scaler.inverse(model.predict_scaled(x_train))
        train_mse = float(np.mean((train_pred - y[:n_train]) ** 2))
        log.append(
            EpochLog(
                epoch=epoch,
                train_loss_scaled=float(np.mean(batch_losses)),
                train_mse=train_mse,
            )
        )
    model.final_train_mse = log[-1].train_mse
    return model, log


def predict_vol(
    model: VolLstmModel, table: VolTable
) -> tuple[list[dt.date], np.ndarray, np.ndarray]:
    """Predictions on the original scale; returns (dates, actual, predicted)."""
    x, y, dates = build_supervised(table, model.config)
    if len(y) == 0:
        raise InputError("empty feature table")
    x_scaled = _scale_inputs(x, model.feature_scalers)
    predicted = model.target_scaler.inverse(model.predict_scaled(x_scaled))
    return dates, y, predicted


def checkpoint_to_dict(model: VolLstmModel) -> dict:
    cfg = model.config
    params = {}
    for i, layer in enumerate(model.lstm_layers):
        params[f"lstm{i}"] = {
            "weight": Tensor2D.from_array(layer.weight).__dict__,
            "bias": [float(v) for v in layer.bias],
        }
    params["head"] = {
        "weight": Tensor2D.from_array(model.head.weight).__dict__,
        "bias": [float(v) for v in model.head.bias],
    }
    return {
        "format": CHECKPOINT_FORMAT,
        "prng": PRNG_ID,
        "seed": cfg.seed,
        "config": cfg.__dict__,
        "scalers": {
            "features": [{"lo": s.lo, "hi": s.hi} for s in model.feature_scalers],
            "target": {"lo": model.target_scaler.lo, "hi": model.target_scaler.hi},
        },
        "n_train_samples": model.n_train_samples,
        "final_train_mse": model.final_train_mse,
        "params": params,
    }


def save_checkpoint(path: str | Path, model: VolLstmModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> VolLstmModel:
    path = Path(path)
    if not path.exists():
        raise InputError(f"checkpoint not found: {path}")
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise InputError(f"unexpected checkpoint format {blob.get('format')!r}")
    cfg = VolLstmConfig(**blob["config"])
    layers = []
    in_dim = cfg.input_dim
    for i in range(cfg.layers):
        rec = blob["params"][f"lstm{i}"]
        weight = Tensor2D(**rec["weight"]).to_array()
        layers.append(LstmLayer(weight, np.asarray(rec["bias"]), in_dim, cfg.hidden))
        in_dim = cfg.hidden
    head_rec = blob["params"]["head"]
    head = DenseLayer(Tensor2D(**head_rec["weight"]).to_array(), np.asarray(head_rec["bias"]))
    scalers = [MinMaxScaler(**s) for s in blob["scalers"]["features"]]
    model = VolLstmModel(
        config=cfg,
        lstm_layers=layers,
        head=head,
        feature_scalers=scalers,
        target_scaler=MinMaxScaler(**blob["scalers"]["target"]),
        n_train_samples=int(blob["n_train_samples"]),
        final_train_mse=float(blob["final_train_mse"]),
    )
    return model
