import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lfadv.errors import ConfigError
from lfadv.estimator import LfAdversarialClassifier


def separable_data(n=120, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    X = np.column_stack([2.0 * y - 1.0 + 0.1 * rng.normal(size=n), rng.normal(size=n)])
    lf = 2 * y + rng.integers(0, 2, size=n)  # lfs 0,1 vote class 0; 2,3 vote class 1
    return X, y, lf


def fast_params(**kw):
    params = dict(
        epochs=8, batch_size=16, hidden_size=8, lr_main=5e-2, lr_d=1e-2,
        dropout=0.0, n_critic=1, lambda_=0.5, eval_every=0, d_holdout_fraction=0.0, seed=1,
    )
    params.update(kw)
    return params


class TestSklearnContract:
    def test_get_set_params_and_clone(self):
        est = LfAdversarialClassifier(lambda_=3.0, hidden_size=50)
        assert est.get_params()["lambda_"] == 3.0
        est.set_params(n_critic=7)
        assert est.n_critic == 7
        dup = clone(est)
        assert dup.get_params() == est.get_params()

    def test_not_fitted_error(self):
        with pytest.raises(NotFittedError):
            LfAdversarialClassifier().predict(np.zeros((1, 3)))

    def test_invalid_hyperparameter_raises_on_fit(self):
        X, y, lf = separable_data()
        with pytest.raises(ConfigError, match="lambda"):
            LfAdversarialClassifier(**fast_params(lambda_=-1.0)).fit(X, y, lf_ids=lf)


class TestFitPredict:
    def test_learns_separable_task(self):
        X, y, lf = separable_data()
        est = LfAdversarialClassifier(**fast_params()).fit(X, y, lf_ids=lf)
        assert est.score(X, y) == 1.0
        assert est.model_.discriminator is not None

    def test_without_lf_ids_is_plain_classifier(self):
        X, y, _ = separable_data()
        est = LfAdversarialClassifier(**fast_params()).fit(X, y)
        assert est.model_.discriminator is None
        assert est.score(X, y) == 1.0

    def test_label_values_preserved(self):
        X, y, lf = separable_data()
        labels = np.where(y == 0, 3, 7)  # non-contiguous class ids
        est = LfAdversarialClassifier(**fast_params()).fit(X, labels, lf_ids=lf)
        np.testing.assert_array_equal(est.classes_, [3, 7])
        assert set(np.unique(est.predict(X))) <= {3, 7}

    def test_sparse_input(self):
        X, y, lf = separable_data()
        est = LfAdversarialClassifier(**fast_params()).fit(sp.csr_matrix(X), y, lf_ids=lf)
        assert est.score(sp.csr_matrix(X), y) == 1.0

    def test_predict_proba_rows_sum_to_one(self):
        X, y, lf = separable_data()
        est = LfAdversarialClassifier(**fast_params()).fit(X, y, lf_ids=lf)
        proba = est.predict_proba(X[:10])
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)

    def test_validation_tracks_best(self):
        X, y, lf = separable_data()
        Xv, yv, _ = separable_data(n=40, seed=9)
        est = LfAdversarialClassifier(**fast_params(eval_every=2)).fit(
            X, y, lf_ids=lf, X_val=Xv, y_val=yv
        )
        assert est.result_.best_metric is not None

    def test_feature_count_mismatch(self):
        X, y, lf = separable_data()
        est = LfAdversarialClassifier(**fast_params()).fit(X, y, lf_ids=lf)
        with pytest.raises(ConfigError, match="features"):
            est.predict(np.zeros((2, 5)))

    def test_lf_ids_length_checked(self):
        X, y, _ = separable_data()
        with pytest.raises(ConfigError, match="lf_ids"):
            LfAdversarialClassifier(**fast_params()).fit(X, y, lf_ids=np.array([0, 1]))

    def test_unseen_validation_label_rejected(self):
        X, y, lf = separable_data()
        with pytest.raises(ConfigError, match="unseen"):
            LfAdversarialClassifier(**fast_params(eval_every=1)).fit(
                X, y, lf_ids=lf, X_val=X[:4], y_val=np.array([0, 1, 2, 0])
            )
