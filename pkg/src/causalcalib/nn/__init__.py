"""Minimal neural toolkit: float64 layers with exact analytic gradients."""

from .layers import (
    BatchNormLayer,
    DenseLayer,
    EmbeddingMeanLayer,
    dropout,
    dropout_with_mask,
    glorot_uniform,
    relu,
    relu_backward,
    softmax,
)
from .lstm import LstmLayer
from .optim import AdamState, adam_step, init_adam
from .tensor import Tensor2D, ensure_finite

__all__ = [
    "AdamState",
    "BatchNormLayer",
    "DenseLayer",
    "EmbeddingMeanLayer",
    "LstmLayer",
    "Tensor2D",
    "adam_step",
    "dropout",
    "dropout_with_mask",
    "ensure_finite",
    "glorot_uniform",
    "init_adam",
    "relu",
    "relu_backward",
    "softmax",
]
