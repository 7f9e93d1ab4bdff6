"""Adam and AdamW parameter updates.

Both refuse the whole step (no state mutated) if any gradient is non-finite.
AdamW applies decoupled weight decay before the Adam delta.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ConfigError, NumericError
from .core import Param

__all__ = ["adam_step", "adamw_step", "Adam", "AdamW", "make_optimizer"]


def _check_grads(params: Sequence[Param]) -> None:
    for p in params:
        if not np.isfinite(p.grad).all():
            raise NumericError("non-finite gradient; step refused")


def _adam_update(p: Param, lr: float, beta1: float, beta2: float, eps: float) -> None:
    g = p.grad
    p.m[...] = beta1 * p.m + (1.0 - beta1) * g
    p.v[...] = beta2 * p.v + (1.0 - beta2) * g * g
    p.t += 1
    m_hat = p.m / (1.0 - beta1**p.t)
    v_hat = p.v / (1.0 - beta2**p.t)
    p.value[...] = p.value - lr * m_hat / (np.sqrt(v_hat) + eps)


def adam_step(
    params: Sequence[Param],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update over ``params`` using their stored grads."""
    _check_grads(params)
    for p in params:
        _adam_update(p, lr, beta1, beta2, eps)


def adamw_step(
    params: Sequence[Param],
    lr: float,
    weight_decay: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Adam with decoupled decay: value -= lr*wd*value, then the Adam delta."""
    _check_grads(params)
    for p in params:
        p.value[...] = p.value - lr * weight_decay * p.value
        _adam_update(p, lr, beta1, beta2, eps)


class Adam:
    kind = "adam"

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {lr}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self, params: Sequence[Param]) -> None:
        adam_step(params, self.lr, self.beta1, self.beta2, self.eps)


class AdamW(Adam):
    kind = "adamw"

    def __init__(self, lr: float, weight_decay: float = 0.01, **kwargs):
        super().__init__(lr, **kwargs)
        self.weight_decay = weight_decay

    def step(self, params: Sequence[Param]) -> None:
        adamw_step(params, self.lr, self.weight_decay, self.beta1, self.beta2, self.eps)


def make_optimizer(kind: str, lr: float, weight_decay: float = 0.0) -> Adam:
    if kind == "adam":
        return Adam(lr)
    if kind == "adamw":
        return AdamW(lr, weight_decay=weight_decay)
    raise ConfigError(f"unknown optimizer kind {kind!r}")
