"""Tests for the time-attention LSTM classifier and its training loop."""

import numpy as np
import pandas as pd
import pytest

from src.classify import (
    Classifier,
    classifier_loss,
    init_ta_lstm,
    ta_lstm_forward,
    train_classifier,
)
from src.config import ClassifierTrainConfig
from src.data import Label
from src.errors import MissingArtifactError, ShapeError, SplitError
from src.numerics import check_gradients
from src.windows import truncate


@pytest.fixture(scope="module")
def regular_cohort(small_cohort):
    return small_cohort.map(lambda r: truncate(r, 137))


@pytest.fixture(scope="module")
def train_val(regular_cohort):
    ids = {label: regular_cohort.by_label(label).subject_ids for label in Label}
    train = regular_cohort.subset(ids[Label.CN][:8] + ids[Label.AD][:8])
    val = regular_cohort.subset(ids[Label.CN][8:] + ids[Label.AD][8:])
    return train, val


def zeroed(params, prefix=""):
    params.assign({n: np.zeros_like(t.data) for n, t in params.items() if n.startswith(prefix)})
    return params


class TestForward:
    def test_zero_lstm_gives_uniform_attention(self, rng):
        params = zeroed(init_ta_lstm(n_channels=5, hidden=4, n_layers=2), "lstm.")
        out = ta_lstm_forward(params, rng.standard_normal((3, 7, 5)))
        np.testing.assert_allclose(out.attention, np.full((3, 7), 1 / 7))

    def test_zero_head_gives_even_odds(self, rng):
        params = zeroed(init_ta_lstm(n_channels=5, hidden=4, n_layers=1, seed=3), "head.")
        out = ta_lstm_forward(params, rng.standard_normal((4, 9, 5)))
        np.testing.assert_array_equal(out.probability, 0.5)

    def test_single_step_attention(self, rng):
        params = init_ta_lstm(n_channels=5, hidden=4, n_layers=1)
        out = ta_lstm_forward(params, rng.standard_normal((2, 1, 5)))
        np.testing.assert_allclose(out.attention, [[1.0], [1.0]])

    def test_attention_is_a_distribution(self, rng):
        params = init_ta_lstm(n_channels=5, hidden=4, n_layers=2, seed=1)
        out = ta_lstm_forward(params, rng.standard_normal((3, 11, 5)))
        assert (out.attention > 0).all()
        np.testing.assert_allclose(out.attention.sum(axis=1), 1.0)
        assert ((out.probability > 0) & (out.probability < 1)).all()

    def test_channel_mismatch(self, rng):
        params = init_ta_lstm(n_channels=5, hidden=4, n_layers=1)
        with pytest.raises(ShapeError):
            ta_lstm_forward(params, rng.standard_normal((2, 6, 4)))

    def test_scores_readout_is_tied_to_length(self, rng):
        params = init_ta_lstm(n_channels=5, hidden=4, n_layers=1, readout="scores", length=6)
        assert ta_lstm_forward(params, rng.standard_normal((2, 6, 5)), "scores").probability.shape == (2,)
        with pytest.raises(ShapeError, match="T=6"):
            ta_lstm_forward(params, rng.standard_normal((2, 7, 5)), "scores")

    def test_scores_readout_needs_length(self):
        with pytest.raises(ValueError):
            init_ta_lstm(readout="scores")

    @pytest.mark.parametrize("readout", ["context", "scores"])
    def test_gradients(self, rng, readout):
        params = init_ta_lstm(n_channels=3, hidden=4, n_layers=2, readout=readout, length=6, seed=5)
        series = rng.standard_normal((3, 6, 3))
        labels = np.array([0.0, 1.0, 1.0])
        report = check_gradients(lambda: classifier_loss(params, series, labels, readout), params)
        assert report.passed(1e-4), report.to_dict()


class TestClassifier:
    def test_prediction_does_not_depend_on_batch_size(self, rng):
        classifier = Classifier(init_ta_lstm(n_channels=5, hidden=4, n_layers=2, seed=2))
        series = rng.standard_normal((7, 10, 5))
        p_one, a_one = classifier.predict(series, batch_size=1)
        p_all, a_all = classifier.predict(series, batch_size=64)
        np.testing.assert_allclose(p_one, p_all, rtol=1e-12)
        np.testing.assert_allclose(a_one, a_all, rtol=1e-12)

    def test_attention_frame(self, regular_cohort):
        cohort = regular_cohort.subset(regular_cohort.subject_ids[:3])
        classifier = Classifier(init_ta_lstm(hidden=3, n_layers=1))
        frame = classifier.attention_frame(cohort)
        assert list(frame.columns) == ["subject_id", "label", "position", "weight"]
        assert len(frame) == 3 * 137
        np.testing.assert_allclose(frame.groupby("subject_id")["weight"].sum(), 1.0)

    def test_save_and_load(self, tmp_path, rng):
        classifier = Classifier(init_ta_lstm(n_channels=5, hidden=4, n_layers=1, readout="scores", length=6), "scores", 6)
        classifier.save(tmp_path / "clf.icnf", config_hash="abc")
        loaded = Classifier.load(tmp_path / "clf.icnf")
        assert loaded.readout == "scores" and loaded.length == 6
        series = rng.standard_normal((2, 6, 5))
        np.testing.assert_array_equal(loaded.predict(series)[0], classifier.predict(series)[0])

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(MissingArtifactError, match="train-classifier"):
            Classifier.load(tmp_path / "absent.icnf")


class TestTraining:
    def test_zero_epochs_selects_initialization(self, train_val, quick_classifier):
        train, val = train_val
        config = quick_classifier.model_copy(update={"epochs": 0})
        result = train_classifier(train, val, config, seed=9)
        fresh = init_ta_lstm(hidden=config.hidden, n_layers=config.n_layers, seed=9)
        assert result.best_epoch == 0
        assert len(result.history) == 1
        assert result.classifier.params.equals(fresh)

    def test_keeps_earliest_best_epoch(self, train_val, quick_classifier):
        train, val = train_val
        result = train_classifier(train, val, quick_classifier.model_copy(update={"epochs": 3}))
        frame = result.history_frame()
        assert list(frame["epoch"]) == [0, 1, 2, 3]
        best = frame["val_auc"].max()
        assert result.best_val_auc == best
        assert result.best_epoch == int(frame.loc[frame["val_auc"] == best, "epoch"].min())
        assert 0.0 <= result.best_val_auc <= 1.0

    def test_selected_parameters_reproduce_best_auc(self, train_val, quick_classifier):
        from src.experiment import auc

        train, val = train_val
        result = train_classifier(train, val, quick_classifier.model_copy(update={"epochs": 3}))
        assert auc(result.classifier.predict_proba(val), val.labels) == pytest.approx(result.best_val_auc)

    def test_deterministic(self, train_val, quick_classifier):
        train, val = train_val
        a = train_classifier(train, val, quick_classifier, seed=4)
        b = train_classifier(train, val, quick_classifier, seed=4)
        assert a.classifier.params.equals(b.classifier.params)
        pd.testing.assert_frame_equal(a.history_frame(), b.history_frame())

    def test_single_class_split(self, train_val, quick_classifier):
        train, val = train_val
        with pytest.raises(SplitError, match="AD"):
            train_classifier(train.by_label(Label.CN), val, quick_classifier)
        with pytest.raises(SplitError, match="validation"):
            train_classifier(train, val.by_label(Label.AD), quick_classifier)

    def test_scores_readout_trains(self, train_val):
        train, val = train_val
        config = ClassifierTrainConfig(epochs=1, batch_size=8, hidden=3, n_layers=1, readout="scores")
        result = train_classifier(train, val, config)
        assert result.classifier.length == 137
        assert result.classifier.predict_proba(val).shape == (len(val),)
