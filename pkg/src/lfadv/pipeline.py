"""Glue between corpora, LFs, features and the trainer."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .errors import ConfigError
from .labeling import LabelingFunction, MatchMatrix, WeakDataset, apply_lfs, resolve_weak_labels

__all__ = ["annotate", "training_arrays", "carve_validation"]


def annotate(
    corpus: Corpus,
    lfs: Sequence[LabelingFunction],
    tie_policy: str = "majority_drop_ties",
    tie_seed: int = 0,
) -> tuple[WeakDataset, MatchMatrix]:
    """Apply LFs and resolve weak labels in one go."""
    matches = apply_lfs(corpus, lfs)
    weak = resolve_weak_labels(matches, lfs, corpus, policy=tie_policy, tie_seed=tie_seed)
    return weak, matches


def training_arrays(
    weak: WeakDataset,
    X: sp.csr_matrix,
    exclude_instances: Optional[np.ndarray] = None,
) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    """One feature row per triple: (rows, weak labels, lf ids)."""
    triples = weak.triples
    if exclude_instances is not None and len(exclude_instances):
        keep = ~np.isin(triples[:, 0], exclude_instances)
        triples = triples[keep]
    if len(triples) == 0:
        raise ConfigError("no training triples: no instance got a weak label")
    return X[triples[:, 0]], triples[:, 1].copy(), triples[:, 2].copy()


def carve_validation(
    weak: WeakDataset,
    fraction: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Hold out a fraction of weakly labeled instances for validation.

    Returns (validation instance ids, their weak labels); the caller should
    exclude these instances from the training triples. Weak labels stand in
    for gold labels, so the validation signal is itself noisy.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"validation fraction must be in (0, 1), got {fraction}")
    labeled = weak.labeled_ids()
    n_val = int(round(fraction * len(labeled)))
    if n_val == 0 or n_val == len(labeled):
        raise ConfigError(f"validation fraction {fraction} leaves an empty part")
    picked = np.random.default_rng(seed).permutation(labeled)[:n_val]
    picked.sort()
    return picked, weak.weak_labels[picked]
