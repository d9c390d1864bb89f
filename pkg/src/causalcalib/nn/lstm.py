"""LSTM layer with exact backpropagation through time.

Gate order in the stacked weight matrix is [input, forget, candidate,
output]; each gate block has shape (hidden, input_dim + hidden) and acts on
the concatenation [x_t, h_{t-1}]. The forget-gate bias starts at 1 so short
sequences can retain state from the first update on.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..rng import CounterRng
from .layers import glorot_uniform
from .tensor import ensure_finite


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LstmLayer:
    def __init__(self, weight: np.ndarray, bias: np.ndarray, input_dim: int, hidden_size: int):
        if weight.shape != (4 * hidden_size, input_dim + hidden_size):
            raise InputError("lstm weight shape inconsistent")
        if bias.shape != (4 * hidden_size,):
            raise InputError("lstm bias shape inconsistent")
        self.weight = np.asarray(weight, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        self.input_dim = input_dim
        self.hidden_size = hidden_size
        self._caches: list[tuple] | None = None

    @classmethod
    def init(cls, rng: CounterRng, input_dim: int, hidden_size: int) -> "LstmLayer":
        fan_in = input_dim + hidden_size
        weight = glorot_uniform(rng, fan_in, hidden_size, (4 * hidden_size, fan_in))
        bias = np.zeros(4 * hidden_size)
        bias[hidden_size : 2 * hidden_size] = 1.0  # forget gate
        return cls(weight, bias, input_dim, hidden_size)

    # Per-gate views of the stacked parameters.
    def _gate(self, which: int) -> np.ndarray:
        h = self.hidden_size
        return self.weight[which * h : (which + 1) * h]

    @property
    def w_input(self) -> np.ndarray:
        return self._gate(0)

    @property
    def w_forget(self) -> np.ndarray:
        return self._gate(1)

    @property
    def w_candidate(self) -> np.ndarray:
        return self._gate(2)

    @property
    def w_output(self) -> np.ndarray:
        return self._gate(3)

    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def step(
        self, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, tuple]:
        """One time step; returns (h_t, c_t, cache for the backward pass)."""
        x_t = np.asarray(x_t, dtype=float)
        if x_t.ndim != 2 or x_t.shape[1] != self.input_dim:
            raise InputError(f"lstm step expects (batch, {self.input_dim}) input, got {x_t.shape}")
        if h_prev.shape != (x_t.shape[0], self.hidden_size) or c_prev.shape != h_prev.shape:
            raise InputError("lstm state shape mismatch")
        h = self.hidden_size
        xh = np.hstack([x_t, h_prev])
        z = xh @ self.weight.T + self.bias
        i = _sigmoid(z[:, 0 * h : 1 * h])
        f = _sigmoid(z[:, 1 * h : 2 * h])
        g = np.tanh(z[:, 2 * h : 3 * h])
        o = _sigmoid(z[:, 3 * h : 4 * h])
        c_t = f * c_prev + i * g
        tanh_c = np.tanh(c_t)
        h_t = o * tanh_c
        ensure_finite("lstm", h_t, c_t)
        return h_t, c_t, (xh, i, f, g, o, c_prev, tanh_c)

    def forward_sequence(
        self, x: np.ndarray, h0: np.ndarray | None = None, c0: np.ndarray | None = None
    ) -> np.ndarray:
        """Run a (batch, time, input_dim) sequence; returns (batch, time, hidden)."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 3:
            raise InputError("lstm forward_sequence expects (batch, time, input) data")
        batch, steps, _ = x.shape
        h = np.zeros((batch, self.hidden_size)) if h0 is None else h0
        c = np.zeros((batch, self.hidden_size)) if c0 is None else c0
        self._caches = []
        outputs = np.empty((batch, steps, self.hidden_size))
        for t in range(steps):
            h, c, cache = self.step(x[:, t, :], h, c)
            self._caches.append(cache)
            outputs[:, t, :] = h
        return outputs

    def backward_sequence(self, grad_outputs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """BPTT given dLoss/dh_t for every step; returns (grad_x, grad_W, grad_b)."""
        if self._caches is None:
            raise InputError("lstm backward called before forward")
        grad_outputs = np.asarray(grad_outputs, dtype=float)
        steps = len(self._caches)
        batch = grad_outputs.shape[0]
        if grad_outputs.shape != (batch, steps, self.hidden_size):
            raise InputError("lstm backward shape mismatch")
        h = self.hidden_size
        grad_w = np.zeros_like(self.weight)
        grad_b = np.zeros_like(self.bias)
        grad_x = np.empty((batch, steps, self.input_dim))
        dh_next = np.zeros((batch, h))
        dc_next = np.zeros((batch, h))
        for t in range(steps - 1, -1, -1):
            xh, i, f, g, o, c_prev, tanh_c = self._caches[t]
            dh = grad_outputs[:, t, :] + dh_next
            dc = dc_next + dh * o * (1.0 - tanh_c**2)
            do = dh * tanh_c
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dz = np.hstack(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g**2),
                    do * o * (1.0 - o),
                ]
            )
            grad_w += dz.T @ xh
            grad_b += dz.sum(axis=0)
            dxh = dz @ self.weight
            grad_x[:, t, :] = dxh[:, : self.input_dim]
            dh_next = dxh[:, self.input_dim :]
            dc_next = dc * f
        ensure_finite("lstm backward", grad_x, grad_w, grad_b)
        return grad_x, grad_w, grad_b
