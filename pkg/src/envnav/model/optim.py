"""MSE loss, Adam and the step learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyBatch, ShapeMismatch


@dataclass(frozen=True)
class LossReport:
    n: int
    mse: float


def loss(predictions, labels) -> LossReport:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if len(p) != len(y):
        raise ShapeMismatch(f"{len(p)} predictions for {len(y)} labels")
    if len(y) == 0:
        raise EmptyBatch("loss of an empty batch")
    return LossReport(len(y), float(np.mean((y - p) ** 2)))


def loss_grad(predictions, labels) -> np.ndarray:
    """d MSE / d predictions."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return 2.0 * (p - y) / len(y)


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(params: dict, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; returns new ``(params, state)``."""
    t = state.t + 1
    new_p, m, v = {}, {}, {}
    for k, theta in params.items():
        g = grads[k]
        if g.shape != theta.shape:
            raise ShapeMismatch(f"gradient for {k} has shape {g.shape}, parameter {theta.shape}")
        m[k] = beta1 * state.m.get(k, 0.0) + (1 - beta1) * g
        v[k] = beta2 * state.v.get(k, 0.0) + (1 - beta2) * g * g
        m_hat = m[k] / (1 - beta1 ** t)
        v_hat = v[k] / (1 - beta2 ** t)
        new_p[k] = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_p, AdamState(m, v, t)


def learning_rate(epoch: int, base: float = 1e-4, halving_period: int = 25) -> float:
    return base * 0.5 ** (epoch // halving_period)
