"""Sklearn-style estimator facade over the adversarial trainer.

``LfAdversarialClassifier`` takes one feature row per training triple plus
the weak label and the id of the labeling function that produced it. With
``lf_ids=None`` (or ``lambda_=0``) it degrades to the plain
extractor+classifier baseline. The class follows the scikit-learn estimator
contract (get_params/set_params/clone, fitted attributes with trailing
underscores), so it composes with model selection utilities that accept
extra fit parameters.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .errors import ConfigError
from .training import TrainConfig, build_model, predict, train

__all__ = ["LfAdversarialClassifier"]


class LfAdversarialClassifier(BaseEstimator, ClassifierMixin):
    """Text classifier trained against an adversarial LF discriminator.

    Parameters mirror :class:`lfadv.training.TrainConfig`; ``lambda_``
    scales the reversed discriminator loss in the shared objective
    j_c - lambda * j_d.
    """

    def __init__(
        self,
        lambda_: float = 2.0,
        n_critic: int = 5,
        batch_size: int = 32,
        epochs: int = 10,
        lr_main: float = 1e-4,
        lr_d: float = 1e-4,
        optimizer_main: str = "adam",
        optimizer_d: str = "adam",
        weight_decay: float = 0.0,
        dropout: float = 0.4,
        hidden_size: int = 700,
        f_layers: int = 1,
        c_layers: int = 1,
        d_layers: int = 1,
        eval_every: int = 1,
        metric: str = "accuracy",
        positive_class: int = 1,
        checkpoint_policy: str = "best",
        d_holdout_fraction: float = 0.1,
        seed: int = 0,
    ):
        self.lambda_ = lambda_
        self.n_critic = n_critic
        self.batch_size = batch_size
        self.epochs = epochs
        self.lr_main = lr_main
        self.lr_d = lr_d
        self.optimizer_main = optimizer_main
        self.optimizer_d = optimizer_d
        self.weight_decay = weight_decay
        self.dropout = dropout
        self.hidden_size = hidden_size
        self.f_layers = f_layers
        self.c_layers = c_layers
        self.d_layers = d_layers
        self.eval_every = eval_every
        self.metric = metric
        self.positive_class = positive_class
        self.checkpoint_policy = checkpoint_policy
        self.d_holdout_fraction = d_holdout_fraction
        self.seed = seed

    def _config(self) -> TrainConfig:
        cfg = TrainConfig(**{k: v for k, v in self.get_params().items()})
        cfg.validate()
        return cfg

    def fit(
        self,
        X,
        y,
        lf_ids: Optional[np.ndarray] = None,
        X_val=None,
        y_val=None,
    ) -> "LfAdversarialClassifier":
        X, y = check_X_y(X, y, accept_sparse="csr", dtype=np.float64)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ConfigError("fit needs at least 2 classes in y")
        self.n_features_in_ = X.shape[1]

        lf = None
        n_lfs = None
        if lf_ids is not None:
            lf = np.asarray(lf_ids, dtype=np.int64)
            if lf.shape != (X.shape[0],):
                raise ConfigError("lf_ids must be one id per training row")
            if lf.min() < 0:
                raise ConfigError("lf_ids must be non-negative")
            n_lfs = int(lf.max()) + 1

        val_X = None
        val_y = None
        if X_val is not None:
            val_X = check_array(X_val, accept_sparse="csr", dtype=np.float64)
            y_val = np.asarray(y_val)
            if not np.isin(y_val, self.classes_).all():
                raise ConfigError("y_val contains labels unseen in y")
            val_y = np.searchsorted(self.classes_, y_val)

        cfg = self._config()
        # positive_class refers to a label value; map into class-index space
        if cfg.metric == "f1_pos":
            matches = np.flatnonzero(self.classes_ == cfg.positive_class)
            if len(matches) == 0:
                raise ConfigError(f"positive_class {cfg.positive_class} not present in y")
            cfg.positive_class = int(matches[0])

        self.model_ = build_model(self.n_features_in_, len(self.classes_), n_lfs, cfg)
        self.result_ = train(self.model_, X, y_idx, lf, cfg, X_val=val_X, y_val=val_y)
        self.history_ = self.result_.history
        return self

    def _check_fitted_X(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("this LfAdversarialClassifier is not fitted yet")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ConfigError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def predict(self, X) -> np.ndarray:
        X = self._check_fitted_X(X)
        idx, _ = predict(self.model_, X)
        return self.classes_[idx]

    def predict_log_proba(self, X) -> np.ndarray:
        X = self._check_fitted_X(X)
        _, logp = predict(self.model_, X)
        return logp

    def predict_proba(self, X) -> np.ndarray:
        return np.exp(self.predict_log_proba(X))
