"""Classification losses with exact gradients with respect to the logits.

All losses consume softmax probabilities plus integer labels and return
(mean loss, gradient w.r.t. the logits that produced those probabilities),
i.e. the softmax Jacobian is already composed in. Means are taken over the
batch so the calibration weight keeps its meaning at any batch size.

The focal-calibration loss is the focal term plus a weighted per-sample L1
distance between the probability vector and the one-hot label:

    loss = mean_i [ -(1 - p_t)^gamma * log(p_t) ]
           + lam * mean_i sum_c |p_{i,c} - y_{i,c}|

With gamma = 0 the focal term reduces exactly to cross-entropy, and with
lam = 0 the composite reduces exactly to the focal loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InputError

LOG_CLAMP = 1e-12
ROW_SUM_TOL = 1e-9


class LossKind(Enum):
    CE = "ce"
    FL = "fl"
    FCL = "fcl"


@dataclass(frozen=True)
class LossConfig:
    kind: LossKind = LossKind.FCL
    gamma: float = 2.0
    lam: float = 0.1

    def validate(self) -> None:
        if self.gamma < 0:
            raise InputError("gamma must be >= 0")
        if self.lam < 0:
            raise InputError("lambda must be >= 0")

    def compute(self, batch: "PredictionBatch") -> tuple[float, np.ndarray]:
        self.validate()
        if self.kind is LossKind.CE:
            return cross_entropy(batch)
        if self.kind is LossKind.FL:
            return focal_loss(batch, self.gamma)
        return focal_calibration_loss(batch, self.gamma, self.lam)


@dataclass
class PredictionBatch:
    """Row-stochastic class probabilities with integer labels."""

    probs: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.probs.ndim != 2 or self.labels.ndim != 1:
            raise InputError("PredictionBatch expects (N, C) probs and (N,) labels")
        n, c = self.probs.shape
        if n == 0:
            raise InputError("empty prediction batch")
        if self.labels.shape[0] != n:
            raise InputError("labels length does not match probs")
        if self.labels.min() < 0 or self.labels.max() >= c:
            raise InputError(f"label out of range for {c} classes")
        if np.abs(self.probs.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
            raise InputError("probability rows must sum to 1")
        if self.probs.min() < -ROW_SUM_TOL or self.probs.max() > 1.0 + ROW_SUM_TOL:
            raise InputError("probabilities must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    def one_hot(self) -> np.ndarray:
        out = np.zeros_like(self.probs)
        out[np.arange(self.n), self.labels] = 1.0
        return out

    def true_class_probs(self) -> np.ndarray:
        return self.probs[np.arange(self.n), self.labels]


def cross_entropy(batch: PredictionBatch) -> tuple[float, np.ndarray]:
    p_t = np.maximum(batch.true_class_probs(), LOG_CLAMP)
    loss = float(-np.mean(np.log(p_t)))
    grad = (batch.probs - batch.one_hot()) / batch.n
    return loss, grad


def focal_loss(batch: PredictionBatch, gamma: float) -> tuple[float, np.ndarray]:
    if gamma < 0:
        raise InputError("gamma must be >= 0")
    if gamma == 0.0:
        return cross_entropy(batch)
    p_t = batch.true_class_probs()
    p_safe = np.maximum(p_t, LOG_CLAMP)
    one_minus = np.maximum(1.0 - p_t, 0.0)
    log_p = np.log(p_safe)
    loss = float(np.mean(-(one_minus**gamma) * log_p))
    # d loss_i / d p_t; the p_t -> 1 limit of both terms is 0.
    with np.errstate(divide="ignore", invalid="ignore"):
        term = gamma * one_minus ** (gamma - 1.0) * log_p - one_minus**gamma / p_safe
    term = np.where(one_minus > 0.0, term, 0.0)
    # Compose the softmax Jacobian row of the true class.
    idx = np.arange(batch.n)
    grad = -batch.probs * (term * p_t)[:, None]
    grad[idx, batch.labels] += term * p_t
    return loss, grad / batch.n


def calib_error_term(batch: PredictionBatch) -> tuple[float, np.ndarray]:
    """Mean per-sample L1 gap between probabilities and the one-hot label.

    The gradient uses the standard subgradient sign(p - y) with sign(0) = 0,
    composed through the softmax.
    """
    diff = batch.probs - batch.one_hot()
    value = float(np.abs(diff).sum(axis=1).mean())
    sign = np.sign(diff)
    weighted = (sign * batch.probs).sum(axis=1, keepdims=True)
    grad = batch.probs * (sign - weighted) / batch.n
    return value, grad


def focal_calibration_loss(
    batch: PredictionBatch, gamma: float, lam: float
) -> tuple[float, np.ndarray]:
    if lam < 0:
        raise InputError("lambda must be >= 0")
    fl_value, fl_grad = focal_loss(batch, gamma)
    if lam == 0.0:
        return fl_value, fl_grad
    ce_value, ce_grad = calib_error_term(batch)
    return fl_value + lam * ce_value, fl_grad + lam * ce_grad


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise InputError(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff**2)), 2.0 * diff / diff.size
