"""Central-difference gradient verification."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .core import Param

__all__ = ["finite_diff_check"]

ABS_FALLBACK = 1e-8


def finite_diff_check(
    params: Sequence[Param],
    loss_fn: Callable[[], float],
    n_probes: int = 100,
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max discrepancy between analytic gradients and central differences.

    ``loss_fn`` must be deterministic in the parameter values, zero the
    grads, run forward+backward, and return the scalar loss; after it
    returns, ``param.grad`` holds the analytic gradient. ``n_probes``
    coordinates are sampled uniformly over all parameters; the error is
    relative, falling back to absolute when both gradients are below
    ``1e-8``.
    """
    loss_fn()
    analytic = [p.grad.copy() for p in params]

    sizes = np.array([p.value.size for p in params])
    total = int(sizes.sum())
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)
    coords = rng.choice(total, size=min(n_probes, total), replace=False)

    max_err = 0.0
    for flat in coords:
        pi = int(np.searchsorted(offsets, flat, side="right") - 1)
        ci = int(flat - offsets[pi])
        value = params[pi].value
        orig = value.flat[ci]
        value.flat[ci] = orig + h
        loss_plus = loss_fn()
        value.flat[ci] = orig - h
        loss_minus = loss_fn()
        value.flat[ci] = orig

        numeric = (loss_plus - loss_minus) / (2.0 * h)
        a = analytic[pi].flat[ci]
        denom = max(abs(a), abs(numeric))
        err = abs(a - numeric) if denom < ABS_FALLBACK else abs(a - numeric) / denom
        max_err = max(max_err, err)

    loss_fn()  # leave grads consistent with the unperturbed parameters
    return max_err
