"""Frozen extractor + trainable regressor, trained with Adam on MSE."""

from .checkpoint import load, save
from .extractor import FrozenConvExtractor
from .network import Model, parse_variant
from .optim import AdamState, LossReport, adam_step, learning_rate, loss
from .regressor import FCNN, GRU
from .training import TrainConfig, train

__all__ = [
    "AdamState", "FCNN", "FrozenConvExtractor", "GRU", "LossReport", "Model", "TrainConfig",
    "adam_step", "learning_rate", "load", "loss", "parse_variant", "save", "train",
]
