import itertools

import numpy as np
import pytest

from lfadv.errors import ConfigError
from lfadv.metrics import (
    SignificanceResult,
    approx_randomization_test,
    metric_value,
    permutation_diffs,
    score,
)


def exact_randomization_p(preds_a, preds_b, golds, metric, positive_class=1):
    """Enumerate all 2^n swap patterns: the exact null distribution."""
    preds_a, preds_b = np.asarray(preds_a), np.asarray(preds_b)
    golds = np.asarray(golds)
    obs = abs(
        metric_value(metric, preds_a, golds, positive_class)
        - metric_value(metric, preds_b, golds, positive_class)
    )
    n = len(golds)
    hits = 0
    for pattern in itertools.product([False, True], repeat=n):
        swap = np.array(pattern)
        pa = np.where(swap, preds_b, preds_a)
        pb = np.where(swap, preds_a, preds_b)
        d = abs(
            metric_value(metric, pa, golds, positive_class)
            - metric_value(metric, pb, golds, positive_class)
        )
        if d >= obs - 1e-12:
            hits += 1
    return hits / 2**n


class TestScore:
    def test_identical_predictions(self):
        r = score([0, 1, 1, 0], [0, 1, 1, 0])
        assert r.accuracy == 1.0 and r.f1 == 1.0 and r.precision == 1.0 and r.recall == 1.0

    def test_all_negative_predictions(self):
        r = score([0, 0, 0, 0], [0, 1, 1, 0])
        assert r.recall == 0.0 and r.f1 == 0.0 and r.accuracy == 0.5

    def test_f1_is_harmonic_mean_of_printed_p_and_r(self):
        # constructed so P = 0.16 and R = 0.72 exactly
        golds = [1] * 36 + [1] * 14 + [0] * 189 + [0] * 50
        preds = [1] * 36 + [0] * 14 + [1] * 189 + [0] * 50
        r = score(preds, golds)
        assert r.precision == pytest.approx(0.16)
        assert r.recall == pytest.approx(0.72)
        assert r.f1 == pytest.approx(2 * 0.16 * 0.72 / (0.16 + 0.72), abs=1e-12)
        assert r.f1 == pytest.approx(0.2618, abs=1e-4)

    def test_positive_class_selectable(self):
        preds, golds = [0, 0, 1], [0, 1, 1]
        r0 = score(preds, golds, positive_class=0)
        assert r0.precision == 0.5 and r0.recall == 1.0

    def test_confusion_counts(self):
        r = score([0, 1, 1], [0, 0, 1])
        assert r.confusion == [[1, 1], [0, 1]]
        assert r.tp == 1 and r.fp == 1 and r.fn == 0 and r.tn == 1

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        preds = rng.integers(0, 2, 50)
        golds = rng.integers(0, 2, 50)
        perm = rng.permutation(50)
        a, b = score(preds, golds), score(preds[perm], golds[perm])
        assert (a.accuracy, a.precision, a.recall, a.f1) == (b.accuracy, b.precision, b.recall, b.f1)

    def test_length_mismatch(self):
        with pytest.raises(ConfigError):
            score([0, 1], [0])

    def test_empty(self):
        with pytest.raises(ConfigError):
            score([], [])


class TestRandomizationTest:
    def test_identical_systems_give_p_one(self):
        preds = [0, 1, 0, 1, 1]
        r = approx_randomization_test(preds, preds, [0, 1, 1, 1, 0], n_permutations=200, seed=1)
        assert r.observed_diff == 0.0
        assert r.p_value == 1.0

    def test_eight_item_case_matches_enumeration(self):
        # six disagreement items, so swap patterns can cancel the observed gap
        golds = [1, 1, 1, 1, 0, 0, 0, 0]
        preds_a = [1, 1, 1, 0, 0, 0, 0, 1]
        preds_b = [1, 0, 0, 1, 0, 1, 1, 0]
        exact = exact_randomization_p(preds_a, preds_b, golds, "accuracy")
        assert exact == pytest.approx(44 / 64)  # hand-derived binomial count
        r = approx_randomization_test(preds_a, preds_b, golds, "accuracy", 10000, seed=3)
        assert abs(r.p_value - exact) <= 0.02
        assert 0.02 < exact < 0.98  # the case is informative, not degenerate

    def test_equal_accuracy_different_error_positions(self):
        # both systems err once, so accuracy ties; positive-class F1 does not
        golds = [1, 1, 1, 0, 0, 0]
        preds_a = [1, 1, 0, 0, 0, 0]
        preds_b = [1, 1, 1, 1, 0, 0]
        acc_a = metric_value("accuracy", preds_a, golds)
        acc_b = metric_value("accuracy", preds_b, golds)
        assert acc_a == acc_b
        exact = exact_randomization_p(preds_a, preds_b, golds, "f1_pos")
        r = approx_randomization_test(preds_a, preds_b, golds, "f1_pos", 10000, seed=5)
        assert r.observed_diff != 0.0
        assert abs(r.p_value - exact) <= 0.02

    def test_add_one_smoothing_bounds(self):
        rng = np.random.default_rng(7)
        golds = rng.integers(0, 2, 30)
        preds_a = rng.integers(0, 2, 30)
        preds_b = rng.integers(0, 2, 30)
        for R in (1, 10, 500):
            r = approx_randomization_test(preds_a, preds_b, golds, "accuracy", R, seed=2)
            assert 1 / (R + 1) <= r.p_value <= 1.0

    def test_p_monotone_in_observed_diff_for_fixed_draws(self):
        rng = np.random.default_rng(9)
        golds = rng.integers(0, 2, 40)
        preds_a = rng.integers(0, 2, 40)
        preds_b = rng.integers(0, 2, 40)
        diffs = np.abs(permutation_diffs(preds_a, preds_b, golds, "accuracy", 500, seed=4))
        thresholds = np.linspace(0, 1, 21)
        p = [(np.sum(diffs >= t - 1e-12) + 1) / (len(diffs) + 1) for t in thresholds]
        assert all(b <= a for a, b in zip(p, p[1:]))

    def test_deterministic_per_seed(self):
        golds = [0, 1, 0, 1, 0, 1]
        a = [0, 1, 1, 1, 0, 0]
        b = [1, 1, 0, 1, 0, 1]
        r1 = approx_randomization_test(a, b, golds, "accuracy", 300, seed=11)
        r2 = approx_randomization_test(a, b, golds, "accuracy", 300, seed=11)
        assert r1 == r2

    def test_misaligned_inputs(self):
        with pytest.raises(ConfigError):
            approx_randomization_test([0, 1], [0], [1, 1])

    def test_bad_round_count(self):
        with pytest.raises(ConfigError):
            approx_randomization_test([0], [1], [1], n_permutations=0)

    def test_result_serializable(self):
        r = SignificanceResult(0.1, 0.04, 100, 0, "accuracy")
        assert r.to_dict()["p_value"] == 0.04


class TestMetricValue:
    def test_accuracy(self):
        assert metric_value("accuracy", [1, 0, 1], [1, 1, 1]) == pytest.approx(2 / 3)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            metric_value("mcc", [0], [0])
