"""Trained systems: the volatility LSTM and the DAN-3 text classifier."""

from .dan3 import (
    ClassifierEval,
    Dan3Config,
    Dan3Model,
    evaluate_classifier,
    stratified_split,
    tokenize,
    train_dan3,
    vectorize,
)
from .vol_lstm import (
    EpochLog,
    VolLstmConfig,
    VolLstmModel,
    VolTable,
    build_supervised,
    predict_vol,
    train_vol_lstm,
)

__all__ = [
    "ClassifierEval",
    "Dan3Config",
    "Dan3Model",
    "EpochLog",
    "VolLstmConfig",
    "VolLstmModel",
    "VolTable",
    "build_supervised",
    "evaluate_classifier",
    "predict_vol",
    "stratified_split",
    "tokenize",
    "train_dan3",
    "train_vol_lstm",
]
