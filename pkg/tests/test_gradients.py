"""Randomized gradient checks of every training loss against central differences."""

import numpy as np
import pytest

from src.classify import classifier_loss, init_ta_lstm
from src.config import BrainLmConfig, LstmConfig
from src.forecast import init_brainlm, init_lstm_forecaster, lstm_forward, reconstruction_loss
from src.numerics import check_gradients, ops
from src.windows import tail_mask

pytestmark = pytest.mark.slow

TRIALS = 100
TOLERANCE = 1e-4
MARGIN = 2e-4
ENTRIES = 6


def lstm_trial(rng, seed):
    params = init_lstm_forecaster(LstmConfig(hidden=5), n_channels=3, horizon=2, seed=seed)
    context = rng.standard_normal((2, 4, 3))
    target = rng.standard_normal((2, 2, 3))
    return params, lambda: ops.mse(lstm_forward(params, context, 4), target)


def brainlm_trial(rng, seed):
    config = BrainLmConfig(d_model=8, n_heads=2, n_encoder_layers=1, n_decoder_layers=1)
    params = init_brainlm(config, n_channels=3, window=6, seed=seed)
    windows = rng.standard_normal((2, 6, 3))
    loss_on = "masked" if seed % 2 == 0 else "all"
    return params, lambda: reconstruction_loss(params, windows, tail_mask(6, 1 / 6), 2, loss_on)


def ta_lstm_trial(rng, seed):
    readout = "context" if seed % 2 == 0 else "scores"
    params = init_ta_lstm(n_channels=3, hidden=4, n_layers=2, readout=readout, length=6, seed=seed)
    series = rng.standard_normal((2, 6, 3))
    labels = np.array([0.0, 1.0])
    return params, lambda: classifier_loss(params, series, labels, readout)


@pytest.mark.parametrize("build", [lstm_trial, brainlm_trial, ta_lstm_trial], ids=["lstm", "brainlm", "ta_lstm"])
def test_loss_gradients_over_random_trials(build, relu_margin):
    rng = np.random.default_rng(2024)
    checked, worst = 0, 0.0
    for seed in range(4 * TRIALS):
        if checked == TRIALS:
            break
        params, loss_fn = build(rng, seed)
        if relu_margin(loss_fn) <= MARGIN:
            continue
        report = check_gradients(loss_fn, params, entries=ENTRIES, seed=seed)
        assert report.passed(TOLERANCE), f"trial {seed}: {report.to_dict()}"
        worst = max(worst, report.max_error)
        checked += 1
    assert checked == TRIALS, f"only {checked} trials away from a ReLU kink"
    assert worst < TOLERANCE
