"""Trainable regressors with hand-written reverse-mode gradients.

Both regressors map features to one unbounded scalar (predicted yaw).
Parameters live in an ordered ``dict`` of float64 arrays so the optimizer,
the gradient checker and the checkpoint code can treat them uniformly.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeMismatch


def _init_rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), tag])))


def _fan_in_uniform(rng, shape, fan_in):
    """U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual default for dense and recurrent layers."""
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class FCNN:
    """Dense ReLU stack with a linear scalar head."""

    variant = "fcnn"
    timesteps = 1

    def __init__(self, input_dim: int, hidden=(64, 32), seed: int = 0, params=None):
        self.input_dim = int(input_dim)
        self.hidden = tuple(int(h) for h in hidden)
        if params is None:
            rng = _init_rng(seed, 0xFC)
            params = {}
            fan = self.input_dim
            for i, h in enumerate(self.hidden + (1,)):
                params[f"W{i + 1}"] = _fan_in_uniform(rng, (h, fan), fan)
                params[f"b{i + 1}"] = _fan_in_uniform(rng, (h,), fan)
                fan = h
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    @property
    def n_layers(self) -> int:
        return len(self.hidden) + 1

    def forward(self, x: np.ndarray):
        """x: (B, D) -> predictions (B,), cache."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeMismatch(f"FCNN expects (batch, {self.input_dim}) features, got {x.shape}")
        acts = [x]
        h = x
        for i in range(1, self.n_layers + 1):
            a = h @ self.params[f"W{i}"].T + self.params[f"b{i}"]
            h = a if i == self.n_layers else np.maximum(a, 0.0)
            acts.append(h)
        return h[:, 0], acts

    def backward(self, cache, dpred: np.ndarray) -> dict:
        acts = cache
        grads = {}
        g = dpred[:, None]
        for i in range(self.n_layers, 0, -1):
            if i != self.n_layers:
                g = g * (acts[i] > 0)
            grads[f"W{i}"] = g.T @ acts[i - 1]
            grads[f"b{i}"] = g.sum(axis=0)
            if i > 1:
                g = g @ self.params[f"W{i}"]
        return {k: grads[k] for k in self.params}


class GRU:
    """Single gated-recurrent layer unrolled over a window, linear head on the last state.

        z  = sigmoid(x Wz' + h Uz' + bz)
        r  = sigmoid(x Wr' + h Ur' + br)
        n  = tanh(x Wn' + (r * h) Un' + bn)
        h' = (1 - z) * n + z * h

    The hidden state starts at zero for every window.
    """

    variant = "gru"
    GATES = ("z", "r", "n")

    def __init__(self, input_dim: int, hidden: int = 64, timesteps: int = 2, seed: int = 0, params=None):
        self.input_dim = int(input_dim)
        self.hidden_size = int(hidden)
        self.timesteps = int(timesteps)
        if params is None:
            rng = _init_rng(seed, 0x6E0)
            H, D = self.hidden_size, self.input_dim
            params = {}
            for g in self.GATES:
                params[f"W{g}"] = _fan_in_uniform(rng, (H, D), H)
                params[f"U{g}"] = _fan_in_uniform(rng, (H, H), H)
                params[f"b{g}"] = _fan_in_uniform(rng, (H,), H)
            params["Wo"] = _fan_in_uniform(rng, (1, H), H)
            params["bo"] = _fan_in_uniform(rng, (1,), H)
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    @property
    def hidden(self):
        return (self.hidden_size,)

    def forward(self, x: np.ndarray):
        """x: (B, T, D) -> predictions (B,), cache."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != self.timesteps or x.shape[2] != self.input_dim:
            raise ShapeMismatch(
                f"GRU expects (batch, {self.timesteps}, {self.input_dim}) features, got {x.shape}")
        p = self.params
        B, T, _ = x.shape
        H = self.hidden_size
        Wx = np.concatenate([p["Wz"], p["Wr"], p["Wn"]])
        xp = (x.reshape(B * T, -1) @ Wx.T).reshape(B, T, 3 * H)
        h = np.zeros((B, H))
        steps = []
        for t in range(T):
            z = sigmoid(xp[:, t, :H] + h @ p["Uz"].T + p["bz"])
            r = sigmoid(xp[:, t, H:2 * H] + h @ p["Ur"].T + p["br"])
            rh = r * h
            n = np.tanh(xp[:, t, 2 * H:] + rh @ p["Un"].T + p["bn"])
            steps.append((h, z, r, rh, n))
            h = (1.0 - z) * n + z * h
        out = h @ p["Wo"].T + p["bo"]
        return out[:, 0], (x, steps, h)

    def backward(self, cache, dpred: np.ndarray) -> dict:
        x, steps, h_last = cache
        p = self.params
        B, T, D = x.shape
        H = self.hidden_size
        g = {k: np.zeros_like(v) for k, v in p.items()}
        g["Wo"] = dpred[None, :] @ h_last
        g["bo"] = np.array([dpred.sum()])
        dh = dpred[:, None] * p["Wo"]
        dxp = np.zeros((B, T, 3 * H))
        for t in range(T - 1, -1, -1):
            h, z, r, rh, n = steps[t]
            dn = dh * (1.0 - z)
            dz = dh * (h - n)
            dh_prev = dh * z
            dan = dn * (1.0 - n * n)
            daz = dz * z * (1.0 - z)
            g["Un"] += dan.T @ rh
            g["bn"] += dan.sum(axis=0)
            drh = dan @ p["Un"]
            dar = drh * h * r * (1.0 - r)
            dh_prev += drh * r
            g["Uz"] += daz.T @ h
            g["bz"] += daz.sum(axis=0)
            g["Ur"] += dar.T @ h
            g["br"] += dar.sum(axis=0)
            dh_prev += daz @ p["Uz"] + dar @ p["Ur"]
            dxp[:, t, :H] = daz
            dxp[:, t, H:2 * H] = dar
            dxp[:, t, 2 * H:] = dan
            dh = dh_prev
        dW = dxp.reshape(B * T, 3 * H).T @ x.reshape(B * T, D)
        g["Wz"], g["Wr"], g["Wn"] = dW[:H], dW[H:2 * H], dW[2 * H:]
        return g
