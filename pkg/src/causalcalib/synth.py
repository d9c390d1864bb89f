"""Deterministic generators for the Monte-Carlo and oracle test harnesses.

Every generator is a pure function of its spec, seed included; the PRNG
identifier travels with generated artifacts so sequences can be reproduced
outside this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .ingest import LabeledDoc
from .rng import PRNG_ID, CounterRng

__all__ = [
    "PRNG_ID",
    "VarSpec",
    "gen_coupled_var",
    "gen_random_walk",
    "gen_white_noise",
    "gen_keyword_corpus",
]

_BURN_IN = 100


@dataclass(frozen=True)
class VarSpec:
    """Coupled pair: x is i.i.d. noise, y is an AR(1) driven by lagged x."""

    T: int
    phi_y: float
    beta_x: float
    lag_x: int
    noise_sd: float
    seed: int

    def validate(self) -> None:
        if self.T < 1:
            raise InputError("T must be >= 1")
        if abs(self.phi_y) >= 1.0:
            raise InputError("phi_y must satisfy |phi_y| < 1 for stationarity")
        if self.lag_x < 1:
            raise InputError("lag_x must be >= 1")
        if self.noise_sd < 0:
            raise InputError("noise_sd must be >= 0")


def gen_coupled_var(spec: VarSpec) -> tuple[np.ndarray, np.ndarray]:
    """y_t = phi_y*y_{t-1} + beta_x*x_{t-lag} + noise; burn-in discarded."""
    spec.validate()
    rng = CounterRng(spec.seed)
    total = spec.T + _BURN_IN
    x = rng.normal(total)
    eps = rng.normal(total)
    y = np.zeros(total)
    for t in range(total):
        own = spec.phi_y * y[t - 1] if t >= 1 else 0.0
        cross = spec.beta_x * x[t - spec.lag_x] if t >= spec.lag_x else 0.0
        y[t] = own + cross + spec.noise_sd * eps[t]
    return x[_BURN_IN:], y[_BURN_IN:]


def gen_white_noise(T: int, seed: int) -> np.ndarray:
    if T < 1:
        raise InputError("T must be >= 1")
    return CounterRng(seed).normal(T)


def gen_random_walk(T: int, seed: int) -> np.ndarray:
    """Cumulative sum of the same draws gen_white_noise yields for this seed."""
    return np.cumsum(gen_white_noise(T, seed))


def gen_keyword_corpus(
    n_classes: int,
    keywords_per_class: int,
    docs_per_class: int,
    doc_len: int,
    label_noise_rate: float,
    seed: int,
    n_filler: int = 50,
) -> list[LabeledDoc]:
    """Synthetic corpus where each class owns an exclusive keyword set.

    Tokens are drawn uniformly from the class's keywords plus a shared
    filler pool; documents are redrawn until they contain at least one
    class keyword, so the clean corpus is separable by keyword presence.
    With probability label_noise_rate the label is replaced by a uniform
    draw over all classes (so rate 1 makes labels independent of the text).
    """
    if n_classes < 2:
        raise InputError("need at least 2 classes")
    if keywords_per_class < 1 or docs_per_class < 1 or doc_len < 1:
        raise InputError("corpus sizes must be positive")
    if not (0.0 <= label_noise_rate <= 1.0):
        raise InputError("label_noise_rate must be in [0, 1]")
    rng = CounterRng(seed)
    class_words = [
        [f"c{c}kw{j}" for j in range(keywords_per_class)] for c in range(n_classes)
    ]
    fillers = [f"filler{j}" for j in range(n_filler)]
    docs: list[LabeledDoc] = []
    for c in range(n_classes):
        pool = class_words[c] + fillers
        for _ in range(docs_per_class):
            while True:
                ids = rng.integers(len(pool), size=doc_len)
                tokens = [pool[i] for i in ids]
                if any(i < keywords_per_class for i in ids):
                    break
            label = c
            if label_noise_rate > 0.0 and rng.uniform() < label_noise_rate:
                label = rng.integers(n_classes)
            docs.append(LabeledDoc(label=f"class{label}", text=" ".join(tokens)))
    return docs
