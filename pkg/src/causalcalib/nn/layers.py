"""Feed-forward building blocks with hand-derived backward passes.

Every layer caches what its backward pass needs on the instance, so one
forward call must be paired with one backward call. Gradients are exact
(the suite checks them against central finite differences).
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..rng import CounterRng
from .tensor import ensure_finite


def glorot_uniform(rng: CounterRng, fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return (rng.uniform(shape) * 2.0 - 1.0) * limit


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    logits = np.asarray(logits, dtype=float)
    if not np.isfinite(logits).all():
        raise InputError("softmax requires finite logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=-1, keepdims=True)
    ensure_finite("softmax", out)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0.0)


def dropout(x: np.ndarray, rate: float, training: bool, rng: CounterRng) -> np.ndarray:
    """Inverted dropout: identity at inference, survivors scaled by 1/(1-rate)."""
    y, _ = dropout_with_mask(x, rate, training, rng)
    return y


def dropout_with_mask(
    x: np.ndarray, rate: float, training: bool, rng: CounterRng
) -> tuple[np.ndarray, np.ndarray | None]:
    if not (0.0 <= rate < 1.0):
        raise InputError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x, dtype=float)
    if not training or rate == 0.0:
        return x, None
    keep = rng.uniform(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


class DenseLayer:
    """Affine map Y = X W^T + b with W of shape (out, in)."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        weight = np.asarray(weight, dtype=float)
        bias = np.asarray(bias, dtype=float)
        if weight.ndim != 2 or bias.shape != (weight.shape[0],):
            raise InputError("dense layer shapes inconsistent")
        self.weight = weight
        self.bias = bias
        self._x: np.ndarray | None = None

    @classmethod
    def init(cls, rng: CounterRng, in_dim: int, out_dim: int) -> "DenseLayer":
        w = glorot_uniform(rng, in_dim, out_dim, (out_dim, in_dim))
        return cls(w, np.zeros(out_dim))

    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.weight.shape[1]:
            raise InputError(
                f"dense forward shape mismatch: input {x.shape} vs weight {self.weight.shape}"
            )
        self._x = x
        y = x @ self.weight.T + self.bias
        ensure_finite("dense", y)
        return y

    def backward(self, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._x is None:
            raise InputError("dense backward called before forward")
        grad_out = np.asarray(grad_out, dtype=float)
        if grad_out.shape != (self._x.shape[0], self.weight.shape[0]):
            raise InputError("dense backward shape mismatch")
        grad_w = grad_out.T @ self._x
        grad_b = grad_out.sum(axis=0)
        grad_x = grad_out @ self.weight
        ensure_finite("dense backward", grad_x, grad_w, grad_b)
        return grad_x, grad_w, grad_b


class BatchNormLayer:
    """Per-feature batch normalization with running statistics.

    Training mode normalizes with the batch mean/variance and updates the
    running statistics by exponential average (new = (1-m)*old + m*batch);
    inference mode normalizes with the running statistics.
    """

    def __init__(self, num_features: int, epsilon: float = 1e-5, momentum: float = 0.1):
        self.scale = np.ones(num_features)
        self.shift = np.zeros(num_features)
        self.running_mean = np.zeros(num_features)
        self.running_var = np.ones(num_features)
        self.epsilon = epsilon
        self.momentum = momentum
        self._cache: tuple | None = None

    def params(self) -> list[np.ndarray]:
        return [self.scale, self.shift]

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.scale.shape[0]:
            raise InputError("batchnorm forward shape mismatch")
        if training:
            if x.shape[0] < 2:
                raise InputError("batchnorm needs batch size >= 2 in training mode")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        x_hat = (x - mean) * inv_std
        self._cache = (x_hat, inv_std) if training else None
        y = self.scale * x_hat + self.shift
        ensure_finite("batchnorm", y)
        return y

    def backward(self, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._cache is None:
            raise InputError("batchnorm backward requires a training-mode forward")
        x_hat, inv_std = self._cache
        m = grad_out.shape[0]
        grad_scale = (grad_out * x_hat).sum(axis=0)
        grad_shift = grad_out.sum(axis=0)
        grad_xhat = grad_out * self.scale
        grad_x = (
            inv_std
            / m
            * (m * grad_xhat - grad_xhat.sum(axis=0) - x_hat * (grad_xhat * x_hat).sum(axis=0))
        )
        ensure_finite("batchnorm backward", grad_x, grad_scale, grad_shift)
        return grad_x, grad_scale, grad_shift


class EmbeddingMeanLayer:
    """Token embedding lookup followed by a mean pool over non-pad positions."""

    def __init__(self, table: np.ndarray, pad_id: int):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2:
            raise InputError("embedding table must be 2-D")
        self.table = table
        self.pad_id = pad_id
        self._cache: tuple | None = None

    @classmethod
    def init(cls, rng: CounterRng, vocab_size: int, dim: int, pad_id: int) -> "EmbeddingMeanLayer":
        table = (rng.uniform((vocab_size, dim)) * 2.0 - 1.0) * 0.05
        table[pad_id] = 0.0
        return cls(table, pad_id)

    def params(self) -> list[np.ndarray]:
        return [self.table]

    def forward(self, token_ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(token_ids)
        if ids.ndim != 2:
            raise InputError("token ids must be a 2-D padded matrix")
        if ids.min() < 0 or ids.max() >= self.table.shape[0]:
            raise InputError(
                f"token id out of range: vocab size is {self.table.shape[0]}"
            )
        batch, length = ids.shape
        vocab = self.table.shape[0]
        mask = ids != self.pad_id
        counts = np.maximum(mask.sum(axis=1), 1)  # all-pad rows yield zero vectors
        # Pooling as a normalized bag-of-words matmul: the mean over non-pad
        # positions equals (occurrence counts / count) @ table.
        rows = np.repeat(np.arange(batch), length)
        bow = np.bincount(
            rows * vocab + ids.ravel(),
            weights=mask.ravel().astype(float),
            minlength=batch * vocab,
        ).reshape(batch, vocab)
        bow /= counts[:, None]
        pooled = bow @ self.table
        self._cache = bow
        ensure_finite("embedding mean", pooled)
        return pooled

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise InputError("embedding backward called before forward")
        bow = self._cache
        grad_table = bow.T @ grad_out
        ensure_finite("embedding backward", grad_table)
        return grad_table
