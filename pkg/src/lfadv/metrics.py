"""Evaluation metrics and paired approximate-randomization significance test."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError

__all__ = ["EvalReport", "SignificanceResult", "score", "metric_value", "approx_randomization_test"]

# slack for |perm diff| >= |observed diff| so float noise cannot flip exact ties
_TIE_EPS = 1e-12


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    positive_class: int
    n: int
    tp: int
    fp: int
    fn: int
    tn: int
    confusion: list  # confusion[g][p] = count of gold g predicted p

    def to_dict(self) -> dict:
        return asdict(self)


def score(preds, golds, positive_class: int = 1) -> EvalReport:
    """Accuracy plus precision/recall/F1 of the designated positive class."""
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if preds.shape != golds.shape:
        raise ConfigError(f"preds/golds length mismatch: {preds.shape} vs {golds.shape}")
    n = len(preds)
    if n == 0:
        raise ConfigError("cannot score an empty prediction set")

    n_classes = int(max(preds.max(), golds.max())) + 1
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (golds, preds), 1)

    pos = positive_class
    tp = int(((preds == pos) & (golds == pos)).sum())
    fp = int(((preds == pos) & (golds != pos)).sum())
    fn = int(((preds != pos) & (golds == pos)).sum())
    tn = n - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(
        accuracy=float((preds == golds).mean()),
        precision=precision,
        recall=recall,
        f1=f1,
        positive_class=pos,
        n=n,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        confusion=confusion.tolist(),
    )


def metric_value(kind: str, preds, golds, positive_class: int = 1) -> float:
    """Scalar metric used for checkpoint selection and significance testing."""
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if kind == "accuracy":
        return float((preds == golds).mean())
    if kind == "f1_pos":
        return score(preds, golds, positive_class).f1
    raise ConfigError(f"unknown metric {kind!r}")


@dataclass
class SignificanceResult:
    observed_diff: float
    p_value: float
    n_permutations: int
    seed: int
    metric: str

    def to_dict(self) -> dict:
        return asdict(self)


def approx_randomization_test(
    preds_a,
    preds_b,
    golds,
    metric: str = "accuracy",
    n_permutations: int = 10000,
    seed: int = 0,
    positive_class: int = 1,
) -> SignificanceResult:
    """Two-sided paired approximate randomization test.

    Each round swaps preds_a[i]/preds_b[i] independently with probability
    1/2 and recomputes the metric difference; with add-one smoothing,
    p = (#{|perm diff| >= |observed diff|} + 1) / (R + 1).
    """
    preds_a = np.asarray(preds_a, dtype=np.int64)
    preds_b = np.asarray(preds_b, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if not (preds_a.shape == preds_b.shape == golds.shape):
        raise ConfigError("preds_a, preds_b and golds must be aligned")
    if n_permutations < 1:
        raise ConfigError("n_permutations must be >= 1")

    observed = metric_value(metric, preds_a, golds, positive_class) - metric_value(
        metric, preds_b, golds, positive_class
    )
    diffs = permutation_diffs(preds_a, preds_b, golds, metric, n_permutations, seed, positive_class)
    hits = int((np.abs(diffs) >= abs(observed) - _TIE_EPS).sum())
    return SignificanceResult(
        observed_diff=float(observed),
        p_value=(hits + 1) / (n_permutations + 1),
        n_permutations=n_permutations,
        seed=seed,
        metric=metric,
    )


def permutation_diffs(
    preds_a,
    preds_b,
    golds,
    metric: str,
    n_permutations: int,
    seed: int,
    positive_class: int = 1,
) -> np.ndarray:
    """Metric differences of the seeded swap rounds (the test's null sample)."""
    rng = np.random.default_rng(seed)
    n = len(golds)
    diffs = np.empty(n_permutations, dtype=np.float64)
    for r in range(n_permutations):
        swap = rng.random(n) < 0.5
        pa = np.where(swap, preds_b, preds_a)
        pb = np.where(swap, preds_a, preds_b)
        diffs[r] = metric_value(metric, pa, golds, positive_class) - metric_value(
            metric, pb, golds, positive_class
        )
    return diffs
