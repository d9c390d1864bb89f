"""Causality-screened sentiment features for volatility forecasting, plus a
calibrated text classifier and the metrics to audit it."""

__version__ = "0.1.0"

from .errors import CausalCalibError, InputError, NumericError, RankDeficientError
from .rng import PRNG_ID, CounterRng

__all__ = [
    "CausalCalibError",
    "CounterRng",
    "InputError",
    "NumericError",
    "PRNG_ID",
    "RankDeficientError",
    "__version__",
]
