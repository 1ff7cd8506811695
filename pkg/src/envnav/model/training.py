"""Mini-batch Adam training of the regressor on precomputed frozen features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..datagen import Dataset, window_arrays
from ..errors import EmptyBatch, InvalidParams
from .network import Model
from .optim import AdamState, adam_step, learning_rate, loss, loss_grad


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 64
    epochs: int = 100
    lr_halving_period: int = 25
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    shuffle_seed: int = 0
    init_seed: int = 0
    extractor_seed: int = 0
    hidden: tuple = (64, 32)
    gru_hidden: int = 64
    extractor_channels: tuple = (16, 16)
    feature_scaling: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidParams("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 0 or self.lr_halving_period < 1:
            raise InvalidParams("batch_size and lr_halving_period must be >= 1, epochs >= 0")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_epsilon > 0):
            raise InvalidParams("invalid Adam hyperparameters")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "extractor_channels", tuple(int(c) for c in self.extractor_channels))

    def lr_at(self, epoch: int) -> float:
        return learning_rate(epoch, self.learning_rate, self.lr_halving_period)


def fit_feature_scale(feats: np.ndarray) -> np.ndarray:
    """Per-feature 1/RMS over the training set (1 for features that are always zero).

    Pure scaling keeps zero features at zero.
    """
    rms = np.sqrt(np.mean(feats * feats, axis=0))
    scale = np.where(rms > 0, 1.0 / np.where(rms > 0, rms, 1.0), 1.0)
    return scale.astype(np.float32).astype(np.float64)


def epoch_order(n: int, shuffle_seed: int, epoch: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(shuffle_seed), 0x5F, epoch])))
    return rng.permutation(n)


def quantize(params: dict) -> dict:
    """Round parameters to float32 values (what checkpoints store)."""
    return {k: v.astype(np.float32).astype(np.float64) for k, v in params.items()}


def train(dataset: Dataset, variant: str, config: TrainConfig | None = None, progress=None):
    """Train a fresh model; returns ``(model, loss_curve)``.

    ``loss_curve[e]`` is the mean squared error over all samples of epoch
    ``e``, measured on each mini-batch before its update.  Parameters are
    rounded to float32 at the end so a saved checkpoint reproduces the
    returned model exactly.
    """
    config = config or TrainConfig()
    if len(dataset) == 0:
        raise EmptyBatch("cannot train on an empty dataset")
    frame_shape = tuple(dataset.manifest["frame_shape"])
    hidden = config.hidden if variant == "fcnn" else (config.gru_hidden,)
    model = Model.create(variant, frame_shape, hidden=hidden, channels=config.extractor_channels,
                         extractor_seed=config.extractor_seed, init_seed=config.init_seed)
    raw = model.extractor(dataset.frames)
    if config.feature_scaling:
        model.feature_scale = fit_feature_scale(raw)
    feats = raw * model.feature_scale

    T = model.timesteps
    if model.kind == "fcnn":
        refs, labels = dataset.frame_ref[:, None], dataset.labels
    else:
        refs, labels = window_arrays(dataset, T)
    if len(labels) == 0:
        raise EmptyBatch(f"dataset yields no windows of length {T}")

    reg = model.regressor
    state = AdamState()
    curve = []
    for epoch in range(config.epochs):
        lr = config.lr_at(epoch)
        order = epoch_order(len(labels), config.shuffle_seed, epoch)
        total = 0.0
        for s in range(0, len(order), config.batch_size):
            idx = order[s:s + config.batch_size]
            x = feats[refs[idx]]
            if model.kind == "fcnn":
                x = x[:, 0]
            y = labels[idx]
            pred, cache = reg.forward(x)
            total += loss(pred, y).mse * len(idx)
            grads = reg.backward(cache, loss_grad(pred, y))
            reg.params, state = adam_step(reg.params, grads, state, lr, config.adam_beta1,
                                          config.adam_beta2, config.adam_epsilon)
        curve.append(total / len(labels))
        if progress:
            progress(epoch, curve[-1])
    reg.params = quantize(reg.params)
    model.adam_state = state
    return model, curve
