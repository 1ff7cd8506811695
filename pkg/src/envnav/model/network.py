"""Extractor + regressor bundled as one controller model."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParams, ShapeMismatch
from ..geometry import wrap
from .extractor import FrozenConvExtractor
from .regressor import FCNN, GRU

VARIANTS = {"fcnn": 1, "gru2": 2, "gru4": 4}


def parse_variant(name: str) -> tuple[str, int]:
    """'fcnn' | 'gru2' | 'gru4' | 'gru-N' -> (kind, timesteps)."""
    key = name.lower().replace("-", "").replace("_", "")
    if key == "fcnn":
        return "fcnn", 1
    if key.startswith("gru") and key[3:].isdigit() and int(key[3:]) >= 1:
        return "gru", int(key[3:])
    raise InvalidParams(f"unknown regressor variant {name!r}; expected fcnn, gru2 or gru4")


def variant_name(kind: str, timesteps: int) -> str:
    return "fcnn" if kind == "fcnn" else f"gru{timesteps}"


class Model:
    """Frozen feature extractor feeding a trainable regressor.

    ``feature_scale`` is a fixed per-feature multiplier set once from the
    training features (see ``training.fit_feature_scale``); it is not trained.
    """

    def __init__(self, extractor: FrozenConvExtractor, regressor, feature_scale=None):
        self.extractor = extractor
        self.regressor = regressor
        d = extractor.output_dim
        if regressor.input_dim != d:
            raise ShapeMismatch(f"regressor input {regressor.input_dim} != extractor output {d}")
        self.feature_scale = np.ones(d) if feature_scale is None else np.asarray(feature_scale, dtype=np.float64)

    @classmethod
    def create(cls, variant: str, frame_shape, hidden=None, channels=(16, 16), extractor_seed: int = 0,
               init_seed: int = 0) -> "Model":
        kind, T = parse_variant(variant)
        ext = FrozenConvExtractor(frame_shape, channels=channels, seed=extractor_seed)
        if kind == "fcnn":
            reg = FCNN(ext.output_dim, hidden=tuple(hidden or (64, 32)), seed=init_seed)
        else:
            reg = GRU(ext.output_dim, hidden=(hidden or (64,))[0], timesteps=T, seed=init_seed)
        return cls(ext, reg)

    @property
    def kind(self) -> str:
        return self.regressor.variant

    @property
    def timesteps(self) -> int:
        return self.regressor.timesteps

    @property
    def variant(self) -> str:
        return variant_name(self.kind, self.timesteps)

    @property
    def frame_shape(self):
        return self.extractor.frame_shape

    def features(self, frames) -> np.ndarray:
        return self.extractor(frames) * self.feature_scale

    def predict_features(self, feats: np.ndarray) -> np.ndarray:
        return self.regressor.forward(feats)[0]

    def forward(self, x) -> float:
        """Predicted yaw for one frame (FCNN) or one window of T frames (GRU)."""
        x = np.asarray(x, dtype=np.float32)
        fs = self.frame_shape
        if self.kind == "fcnn":
            if x.shape != fs:
                raise ShapeMismatch(f"expected a frame of shape {fs}, got {x.shape}")
            return float(self.predict_features(self.features(x)[None])[0])
        if x.shape != (self.timesteps, *fs):
            raise ShapeMismatch(f"expected a window of shape {(self.timesteps, *fs)}, got {x.shape}")
        return float(self.predict_features(self.features(x)[None])[0])

    def controller(self):
        """Closed-loop controller: feeds the latest T frames, zero-padded at the start."""
        T = self.timesteps
        zero = np.zeros(self.frame_shape, dtype=np.float32)

        def control(state, frames):
            if self.kind == "fcnn":
                return wrap(self.forward(frames[-1]))
            window = list(frames[-T:])
            window = [zero] * (T - len(window)) + window
            return wrap(self.forward(np.stack(window)))

        return control
