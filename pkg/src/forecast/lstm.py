"""
Stateless LSTM forecaster: one LSTM layer over the context window and a
linear head that emits every channel for each forecast step at once.
"""

import numpy as np

from src.config import LstmConfig
from src.errors import ShapeError
from src.numerics import ModelParams, Tensor, ops
from src.numerics.layers import init_linear, init_lstm, linear, lstm_layer


def init_lstm_forecaster(
    config: LstmConfig | None = None,
    n_channels: int = 53,
    horizon: int = 4,
    seed: int = 0,
) -> ModelParams:
    config = config or LstmConfig()
    rng = np.random.default_rng(seed)
    params = ModelParams()
    init_lstm(params, rng, "lstm", n_channels, config.hidden, config.forget_bias)
    init_linear(params, rng, "head", config.hidden, horizon * n_channels)
    return params


def lstm_forward(params: ModelParams, context: np.ndarray, context_len: int = 20) -> Tensor:
    """
    Forecast the next steps from ``context`` [B x context_len x channels].

    Returns:
        Tensor [B x horizon x channels] computed from the final hidden state
    """
    context = np.asarray(context, dtype=np.float64)
    n_channels = params["lstm.weight_ih"].shape[0]
    if context.ndim != 3 or context.shape[1] != context_len or context.shape[2] != n_channels:
        raise ShapeError(
            "lstm_forward",
            [context.shape],
            f"expected [B x {context_len} x {n_channels}]",
        )
    hidden_states = lstm_layer(params, "lstm", context)
    flat = linear(params, "head", ops.select(hidden_states, context_len - 1, axis=1))
    horizon = flat.shape[1] // n_channels
    return ops.reshape(flat, (context.shape[0], horizon, n_channels))
