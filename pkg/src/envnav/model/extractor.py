"""Frozen convolutional feature extractor."""

from __future__ import annotations

import hashlib
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatch


def _conv_s2(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """3x3-style convolution, stride 2, zero padding k//2, no bias. x: (N, C, H, W)."""
    k = w.shape[-1]
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::2, ::2]
    return np.einsum("nchwij,ocij->nohw", win, w, optimize=True)


class FrozenConvExtractor:
    """Two stride-2 ReLU conv stages with seeded random filters, then flatten.

    The filters are drawn once from a Philox stream keyed by ``seed``
    (He-scaled normal) and never updated.  With no biases an all-zero frame
    maps to an all-zero feature vector.
    """

    def __init__(self, frame_shape, channels=(16, 16), kernel: int = 3, seed: int = 0, weights=None):
        self.frame_shape = tuple(int(s) for s in frame_shape)
        self.channels = tuple(int(c) for c in channels)
        self.kernel = int(kernel)
        self.seed = int(seed)
        cin = 1 if len(self.frame_shape) == 2 else self.frame_shape[2]
        if weights is None:
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, 0xC0A7])))
            weights = []
            for cout in self.channels:
                fan_in = cin * kernel * kernel
                w = rng.standard_normal((cout, cin, kernel, kernel)) * math.sqrt(2.0 / fan_in)
                weights.append(w.astype(np.float32))
                cin = cout
        self.weights = [np.asarray(w, dtype=np.float32) for w in weights]
        for w in self.weights:
            w.setflags(write=False)
        h, wd = self.frame_shape[:2]
        for _ in self.weights:
            h, wd = (h - 1) // 2 + 1, (wd - 1) // 2 + 1
        self.output_shape = (self.channels[-1], h, wd)
        self.output_dim = int(np.prod(self.output_shape))

    def weight_hash(self) -> str:
        h = hashlib.sha256()
        for w in self.weights:
            h.update(np.ascontiguousarray(w, dtype="<f4").tobytes())
        return h.hexdigest()

    def __call__(self, frames: np.ndarray, batch: int = 512) -> np.ndarray:
        """Features for a single frame (D,) or a stack of frames (N, D), float64."""
        frames = np.asarray(frames, dtype=np.float32)
        single = frames.shape == self.frame_shape
        if single:
            frames = frames[None]
        if frames.shape[1:] != self.frame_shape:
            raise ShapeMismatch(f"expected frames of shape {self.frame_shape}, got {frames.shape[1:]}")
        out = np.empty((len(frames), self.output_dim), dtype=np.float64)
        for s in range(0, len(frames), batch):
            x = frames[s:s + batch]
            x = x[:, None] if x.ndim == 3 else np.moveaxis(x, 3, 1)
            for w in self.weights:
                x = np.maximum(_conv_s2(x, w), 0.0)
            out[s:s + batch] = x.reshape(len(x), -1)
        return out[0] if single else out
