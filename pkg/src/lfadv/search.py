"""Seeded random search over the training hyperparameter space."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .training import TrainConfig

__all__ = ["SearchSpace", "Trial", "sample_config", "random_search"]


@dataclass(frozen=True)
class SearchSpace:
    """Ranges and choice sets for each searched hyperparameter."""

    batch_size: tuple[int, int] = (16, 1024)  # log-uniform integer
    dropout: tuple[float, float] = (0.1, 0.5)
    n_critic: tuple[int, ...] = (1, 5, 10, 50)
    lambda_: tuple[float, float] = (0.0, 5.0)
    hidden_size: tuple[int, int] = (100, 1000)
    lr_main: tuple[float, ...] = (1e-4, 5e-4, 1e-3)
    lr_d: tuple[float, ...] = (1e-4, 5e-4, 1e-3)
    f_layers: tuple[int, int] = (1, 10)
    c_layers: tuple[int, int] = (1, 10)
    d_layers: tuple[int, int] = (1, 10)
    eval_every: tuple[int, ...] = (1, 10, 50, 100)


def sample_config(space: SearchSpace, seed: int, base: Optional[TrainConfig] = None) -> TrainConfig:
    """Draw one configuration; all fields not in the space come from ``base``."""
    rng = np.random.default_rng(seed)
    base = base if base is not None else TrainConfig()

    def log_int(lo: int, hi: int) -> int:
        return int(round(np.exp(rng.uniform(np.log(lo), np.log(hi)))))

    cfg = TrainConfig(
        lambda_=float(rng.uniform(*space.lambda_)),
        n_critic=int(rng.choice(space.n_critic)),
        batch_size=min(max(log_int(*space.batch_size), space.batch_size[0]), space.batch_size[1]),
        epochs=base.epochs,
        lr_main=float(rng.choice(space.lr_main)),
        lr_d=float(rng.choice(space.lr_d)),
        optimizer_main=base.optimizer_main,
        optimizer_d=base.optimizer_d,
        weight_decay=base.weight_decay,
        dropout=float(rng.uniform(*space.dropout)),
        hidden_size=int(rng.integers(space.hidden_size[0], space.hidden_size[1] + 1)),
        f_layers=int(rng.integers(space.f_layers[0], space.f_layers[1] + 1)),
        c_layers=int(rng.integers(space.c_layers[0], space.c_layers[1] + 1)),
        d_layers=int(rng.integers(space.d_layers[0], space.d_layers[1] + 1)),
        eval_every=int(rng.choice(space.eval_every)),
        metric=base.metric,
        positive_class=base.positive_class,
        checkpoint_policy=base.checkpoint_policy,
        tie_policy=base.tie_policy,
        d_holdout_fraction=base.d_holdout_fraction,
        seed=base.seed,
    )
    cfg.validate()
    return cfg


@dataclass
class Trial:
    index: int
    config: TrainConfig
    metric: Optional[float] = None
    error: Optional[str] = None
    runtime_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "config": self.config.to_dict(),
            "metric": self.metric,
            "error": self.error,
            "runtime_s": self.runtime_s,
        }


def random_search(
    space: SearchSpace,
    budget: int,
    train_fn: Callable[[TrainConfig], float],
    seed: int,
    base: Optional[TrainConfig] = None,
    log_path: Optional[str | Path] = None,
) -> list[Trial]:
    """Run ``budget`` independent trials; return them ranked by metric.

    ``train_fn`` maps a config to a validation metric (higher is better).
    A failing trial is recorded with its error and ranked last. Completed
    trials sort by metric descending with the trial index as a stable
    tie-break.
    """
    if budget < 1:
        raise ConfigError("search budget must be >= 1")
    trials: list[Trial] = []
    for i in range(budget):
        trial_seed = int(np.random.SeedSequence((seed, i)).generate_state(1)[0])
        cfg = replace(sample_config(space, trial_seed, base), seed=trial_seed)
        start = time.perf_counter()
        trial = Trial(index=i, config=cfg)
        try:
            trial.metric = float(train_fn(cfg))
        except Exception as exc:  # a broken trial must not kill the search
            trial.error = f"{type(exc).__name__}: {exc}"
        trial.runtime_s = time.perf_counter() - start
        trials.append(trial)

    ranked = sorted(
        trials,
        key=lambda t: (t.metric is None, -(t.metric if t.metric is not None else 0.0), t.index),
    )
    if log_path is not None:
        with Path(log_path).open("w", encoding="utf-8") as fh:
            for t in ranked:
                fh.write(json.dumps(t.to_dict()) + "\n")
    return ranked
