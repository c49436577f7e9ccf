import math

import numpy as np
import pytest

from dcom import ingest
from dcom.errors import ConfigError
from dcom.train import (
    EpochReport,
    OptimizerState,
    PlateauScheduler,
    TrainingConfig,
    accuracy,
    adam_step,
    cross_entropy,
    cross_entropy_batch,
    support_weighted_f1,
    train_model,
)
from conftest import TINY_CONFIG


def strip_time(reports):
    """Drop the wall-time field so reports can be compared across runs."""
    return [(r.epoch, r.train_loss, r.val_accuracy, r.val_f1, r.learning_rate)
            for r in reports]


def brute_force_weighted_f1(y_true, y_pred, n_classes):
    """Independent confusion-matrix implementation used as the metric oracle."""
    total = 0.0
    for c in range(n_classes):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total += f1 * support
    return total / len(y_true)


class TestCrossEntropy:
    def test_perfect_prediction(self):
        probs = np.array([0.0, 1.0, 0.0])
        loss, _ = cross_entropy(probs, 1)
        assert loss == 0.0

    def test_uniform_78(self):
        probs = np.full(78, 1 / 78)
        loss, _ = cross_entropy(probs, 13)
        assert loss == pytest.approx(math.log(78), abs=1e-9)
        assert loss == pytest.approx(4.3567, abs=1e-4)

    def test_gradient_identity(self):
        probs = np.array([0.2, 0.5, 0.3])
        _, dlogits = cross_entropy(probs, 2)
        np.testing.assert_allclose(dlogits, probs - np.array([0, 0, 1.0]), atol=1e-12)

    def test_class_weight_scales(self):
        probs = np.array([0.2, 0.5, 0.3])
        loss1, g1 = cross_entropy(probs, 0, class_weight=1.0)
        loss2, g2 = cross_entropy(probs, 0, class_weight=2.0)
        assert loss2 == pytest.approx(2 * loss1)
        np.testing.assert_allclose(g2, 2 * g1)

    def test_label_out_of_range(self):
        with pytest.raises(ConfigError):
            cross_entropy(np.array([0.5, 0.5]), 2)

    def test_batch_mean(self):
        probs = np.array([[0.9, 0.1], [0.4, 0.6]])
        loss, dlogits = cross_entropy_batch(probs, np.array([0, 1]))
        expected = -(math.log(0.9) + math.log(0.6)) / 2
        assert loss == pytest.approx(expected, abs=1e-12)
        assert dlogits.shape == (2, 2)


class TestAdam:
    def test_first_step_magnitude(self):
        params = {"w": np.array([0.0])}
        state = OptimizerState(learning_rate=1e-4)
        adam_step(params, {"w": np.array([1.0])}, state)
        # bias-corrected first step moves by ~lr regardless of gradient scale
        assert abs(params["w"][0] + 1e-4) < 1e-9

    def test_zero_gradient_no_move(self):
        params = {"w": np.array([1.5])}
        adam_step(params, {"w": np.array([0.0])}, OptimizerState())
        assert params["w"][0] == 1.5

    def test_deterministic(self):
        def run():
            params = {"w": np.arange(3, dtype=float)}
            state = OptimizerState(learning_rate=1e-2)
            for _ in range(5):
                adam_step(params, {"w": params["w"] * 0.1 + 1}, state)
            return params["w"]

        np.testing.assert_array_equal(run(), run())

    def test_nonfinite_gradient_aborts(self):
        from dcom.errors import DiagnosticError

        with pytest.raises(DiagnosticError):
            adam_step({"w": np.zeros(1)}, {"w": np.array([np.nan])}, OptimizerState())


class TestPlateauScheduler:
    def test_six_flat_epochs_halve(self):
        sched = PlateauScheduler(learning_rate=1e-4)
        lrs = [sched.step(0.5) for _ in range(6)]
        assert lrs[:5] == [1e-4] * 5
        assert lrs[5] == pytest.approx(5e-5)

    def test_improving_keeps_lr(self):
        sched = PlateauScheduler(learning_rate=1e-4)
        for metric in np.linspace(0.1, 0.9, 10):
            assert sched.step(metric) == 1e-4

    def test_improvement_resets_patience(self):
        sched = PlateauScheduler(learning_rate=1e-4)
        sched.step(0.5)
        for _ in range(4):
            sched.step(0.5)
        assert sched.step(0.6) == 1e-4
        assert sched.epochs_since_improvement == 0

    def test_monotone_non_increasing(self):
        sched = PlateauScheduler(learning_rate=1e-3)
        rng = np.random.default_rng(0)
        lrs = [sched.step(float(m)) for m in rng.random(60)]
        assert all(b <= a for a, b in zip(lrs, lrs[1:]))

    def test_min_lr_floor(self):
        sched = PlateauScheduler(learning_rate=1e-4, min_lr=4e-5)
        for _ in range(40):
            sched.step(0.5)
        assert sched.learning_rate == 4e-5


class TestMetrics:
    def test_perfect(self):
        assert support_weighted_f1([0, 1, 2], [0, 1, 2], 3) == 1.0

    def test_hand_case(self):
        # true [A,A,A,B], pred [A,A,B,B] -> (3*0.8 + 1*(2/3))/4
        score = support_weighted_f1([0, 0, 0, 1], [0, 0, 1, 1], 2)
        assert score == pytest.approx(0.7667, abs=1e-4)

    def test_all_wrong_class(self):
        assert support_weighted_f1([0, 0], [1, 1], 2) == 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(1, 40))
            C = int(rng.integers(2, 7))
            y_true = rng.integers(0, C, size=n).tolist()
            y_pred = rng.integers(0, C, size=n).tolist()
            got = support_weighted_f1(y_true, y_pred, C)
            assert got == pytest.approx(brute_force_weighted_f1(y_true, y_pred, C), abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            support_weighted_f1([], [], 2)
        with pytest.raises(ConfigError):
            accuracy([], [])


class TestTrainingConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            TrainingConfig.from_dict({"learning_rte": 0.1})

    def test_round_trip(self):
        config = TrainingConfig(mode="multi", r=7, dense_widths=(8, 4))
        assert TrainingConfig.from_dict(config.to_dict()) == config


class TestTrainModel:
    def test_sanity_learns(self, sanity_bundle):
        bundle, reports = sanity_bundle
        assert bundle.metadata["best_val_f1"] >= 0.95
        assert reports[4].train_loss < reports[0].train_loss

    def test_deterministic(self, sanity_corpus):
        instances, split = sanity_corpus
        config = TrainingConfig(mode="single", epochs=3, **TINY_CONFIG)
        _, a = train_model(instances, split, config, seed=5)
        _, b = train_model(instances, split, config, seed=5)
        assert strip_time(a) == strip_time(b)

    def test_zero_epochs_uniform(self, sanity_corpus):
        from dcom.infer import predict_one

        instances, split = sanity_corpus
        config = TrainingConfig(mode="single", epochs=0, **TINY_CONFIG)
        bundle, reports = train_model(instances, split, config, seed=5)
        assert reports == []
        pred = predict_one(bundle, instances[0], seed=0)
        np.testing.assert_allclose(pred.probabilities, 0.5, atol=1e-12)

    def test_unlabeled_train_instance_rejected(self, sanity_corpus):
        from dcom.core import ColumnInstance

        instances, split = sanity_corpus
        broken = list(instances)
        broken[split.train[0]] = ColumnInstance(("x",), None)
        config = TrainingConfig(mode="single", epochs=1, **TINY_CONFIG)
        with pytest.raises(ConfigError, match="labeled"):
            train_model(broken, split, config, seed=0)

    def test_all_ones_class_weights_identical(self, sanity_corpus):
        instances, split = sanity_corpus
        config = TrainingConfig(mode="single", epochs=2, **TINY_CONFIG)
        bundle_plain, reports_plain = train_model(instances, split, config, seed=5)
        # balanced corpus -> computed class weights are exactly all ones
        weighted = TrainingConfig(mode="single", epochs=2, use_class_weights=True,
                                  **TINY_CONFIG)
        bundle_w, reports_w = train_model(instances, split, weighted, seed=5)
        assert strip_time(reports_plain) == strip_time(reports_w)
        for name in bundle_plain.params:
            np.testing.assert_array_equal(bundle_plain.params[name], bundle_w.params[name])

    def test_scaler_fitted_on_train_only(self, sanity_corpus):
        from dcom.features import extract_features

        instances, split = sanity_corpus
        config = TrainingConfig(mode="single", epochs=1, **TINY_CONFIG)
        bundle, _ = train_model(instances, split, config, seed=5)
        train_rows = np.array([extract_features(instances[i]) for i in split.train])
        np.testing.assert_allclose(bundle.scaler.mean, train_rows.mean(axis=0), atol=1e-12)

    def test_epoch_report_fields(self, sanity_bundle):
        _, reports = sanity_bundle
        for r in reports:
            assert isinstance(r, EpochReport)
            assert 0.0 <= r.val_accuracy <= 1.0
            assert 0.0 <= r.val_f1 <= 1.0
            assert r.train_loss >= 0.0
            assert r.learning_rate > 0.0
