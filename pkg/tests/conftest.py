"""Shared fixtures: tiny architectures and small synthetic cohorts."""

import configparser

import numpy as np
import pytest

from src.config import (
    BrainLmConfig,
    ClassifierTrainConfig,
    ForecastTrainConfig,
    LstmConfig,
    RunConfig,
    WindowConfig,
)
from src.data import Cohort, IcnRecord, Label, synth_cohort, zscore_cohort


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def window_config():
    return WindowConfig()


@pytest.fixture
def tiny_lstm():
    return LstmConfig(hidden=5)


@pytest.fixture
def tiny_brainlm():
    return BrainLmConfig(d_model=8, n_heads=2, n_encoder_layers=1, n_decoder_layers=1, ff_multiplier=2)


@pytest.fixture
def quick_forecast():
    return ForecastTrainConfig(epochs=2, batch_size=64, lr=3e-3, log_every=1, seed=0)


@pytest.fixture
def quick_classifier():
    return ClassifierTrainConfig(epochs=2, batch_size=8, lr=3e-3, hidden=4, n_layers=1, log_every=1, seed=0)


@pytest.fixture(scope="session")
def small_cohort() -> Cohort:
    """Z-scored 12 CN / 12 AD cohort with both scan lengths."""
    return zscore_cohort(synth_cohort(n_cn=12, n_ad=12, t_regular_fraction=0.5, seed=7))


@pytest.fixture
def make_record():
    def factory(subject_id="S0000", label=Label.CN, length=137, n_channels=53, seed=0):
        series = np.random.default_rng(seed).standard_normal((n_channels, length))
        return IcnRecord(subject_id, label, series)

    return factory


@pytest.fixture
def tiny_run_config(tmp_path) -> RunConfig:
    """A RunConfig small enough for an end-to-end CLI pass in seconds."""
    return RunConfig.model_validate({
        "paths": {
            "cohort_dir": str(tmp_path / "cohort"),
            "forecaster_dir": str(tmp_path / "forecasters"),
            "variants_dir": str(tmp_path / "variants"),
            "run_dir": str(tmp_path / "run"),
        },
        "data": {"n_cn": 10, "n_ad": 10, "seed": 3},
        "lstm": {"hidden": 4},
        "brainlm": {"d_model": 8, "n_heads": 2, "n_encoder_layers": 1, "n_decoder_layers": 1, "ff_multiplier": 2},
        "forecast": {"epochs": 1, "batch_size": 128, "log_every": 1},
        "classifier": {"epochs": 1, "batch_size": 16, "hidden": 3, "n_layers": 1, "log_every": 1},
        "experiment": {"seeds": [0], "n_folds": 2, "test_fraction": 0.2},
    })


@pytest.fixture
def write_ini():
    """Writer of INI files in the layout ``load_config`` reads; list values are comma-joined."""
    def writer(path, sections: dict) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for name, values in sections.items():
            parser[name] = {k: ",".join(map(str, v)) if isinstance(v, list) else str(v) for k, v in values.items()}
        with open(path, "w", encoding="utf-8") as f:
            parser.write(f)
        return str(path)

    return writer


@pytest.fixture
def relu_margin(monkeypatch):
    """
    Smallest |input| any ReLU sees during one call of a loss function.

    Central differences straddle the ReLU kink when an input lies within
    about ``h`` of zero, so gradient checks draw inputs with a margin.
    """
    from src.numerics import ops

    seen: list[float] = []
    relu = ops.relu

    def recording(a):
        a = ops.as_tensor(a)
        seen.append(float(np.abs(a.data).min()))
        return relu(a)

    monkeypatch.setattr(ops, "relu", recording)

    def measure(loss_fn) -> float:
        seen.clear()
        loss_fn()
        return min(seen, default=np.inf)

    return measure
