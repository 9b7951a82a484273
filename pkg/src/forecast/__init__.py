"""Generative forecasters (Stateless LSTM and BrainLM-style masked transformer)."""
from .lstm import init_lstm_forecaster, lstm_forward
from .brainlm import init_brainlm, brainlm_forward, reconstruction_loss
from .model import ForecastModel, Forecaster, last_value_baseline_mse, sidecar
from .trainer import ForecastResult, train_forecaster
from .extend import extend_series, extend_cohort, placeholder_rng

__all__ = [
    "init_lstm_forecaster",
    "lstm_forward",
    "init_brainlm",
    "brainlm_forward",
    "reconstruction_loss",
    "ForecastModel",
    "Forecaster",
    "last_value_baseline_mse",
    "sidecar",
    "ForecastResult",
    "train_forecaster",
    "extend_series",
    "extend_cohort",
    "placeholder_rng",
]
