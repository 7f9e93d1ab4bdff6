"""Negative log-likelihood loss over log-probability rows."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError

__all__ = ["nll_loss"]


def nll_loss(log_probs: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean NLL and its gradient in log-prob space.

    loss = -mean_i log_probs[i, targets[i]]; the gradient is -1/B at the
    target entries and 0 elsewhere.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    n, k = log_probs.shape
    if n == 0:
        raise NumericError("empty batch")
    if targets.shape != (n,):
        raise NumericError(f"targets shape {targets.shape} does not match batch {n}")
    if targets.min() < 0 or targets.max() >= k:
        raise NumericError(f"target class out of range for {k} classes")
    rows = np.arange(n)
    loss = float(-log_probs[rows, targets].mean())
    dlogp = np.zeros_like(log_probs)
    dlogp[rows, targets] = -1.0 / n
    return loss, dlogp
