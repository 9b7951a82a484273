"""
Time-attention LSTM classifier.

A stack of LSTM layers produces hidden states h_1..h_T; a learned query
scores each step, s_t = q.h_t / sqrt(hidden), and alpha = softmax(s).
The ``context`` read-out feeds c = sum_t alpha_t h_t to a single-logit
head; the ``scores`` read-out feeds the T scores themselves to a head of
width T, so that variant is tied to one sequence length.
"""

from dataclasses import dataclass

import numpy as np

from src.errors import ShapeError
from src.numerics import ModelParams, Tensor, ops
from src.numerics.layers import init_linear, init_lstm, linear, lstm_layer
from src.numerics.params import uniform_init

READOUTS = ("context", "scores")


@dataclass
class ClassifierOutput:
    """Per-subject P(AD), attention weights [B x T] and the raw logits."""
    probability: np.ndarray
    attention: np.ndarray
    logits: Tensor

    def to_dict(self) -> dict:
        return {
            "probability": self.probability.tolist(),
            "attention": self.attention.tolist(),
        }


def init_ta_lstm(
    n_channels: int = 53,
    hidden: int = 64,
    n_layers: int = 3,
    readout: str = "context",
    length: int | None = None,
    forget_bias: float = 1.0,
    seed: int = 0,
) -> ModelParams:
    """
    Args:
        length: Sequence length; required by the ``scores`` read-out only
    """
    if readout not in READOUTS:
        raise ValueError(f"unknown readout '{readout}'; expected one of {READOUTS}")
    if readout == "scores" and not length:
        raise ValueError("the 'scores' readout needs the sequence length")
    rng = np.random.default_rng(seed)
    params = ModelParams()
    for layer in range(n_layers):
        init_lstm(params, rng, f"lstm.{layer}", n_channels if layer == 0 else hidden, hidden, forget_bias)
    params.add("attention.query", uniform_init(rng, (hidden, 1), hidden))
    init_linear(params, rng, "head", hidden if readout == "context" else length, 1)
    return params


def _n_layers(params: ModelParams) -> int:
    return len({name.split(".")[1] for name in params if name.startswith("lstm.")})


def ta_lstm_forward(params: ModelParams, series: np.ndarray, readout: str = "context") -> ClassifierOutput:
    """
    Classify ``series`` [B x T x channels].

    Raises:
        ShapeError: wrong channel count, empty sequence, or a ``scores``
            head built for another length
    """
    series = np.asarray(series, dtype=np.float64)
    n_channels = params["lstm.0.weight_ih"].shape[0]
    if series.ndim != 3 or series.shape[2] != n_channels:
        raise ShapeError("ta_lstm_forward", [series.shape], f"expected [B x T x {n_channels}]")
    batch, length, _ = series.shape
    if length < 1:
        raise ShapeError("ta_lstm_forward", [series.shape], "sequence must have at least one step")
    if readout == "scores" and params["head.weight"].shape[0] != length:
        raise ShapeError(
            "ta_lstm_forward",
            [series.shape],
            f"scores head expects T={params['head.weight'].shape[0]}",
        )

    hidden_states = series
    for layer in range(_n_layers(params)):
        hidden_states = lstm_layer(params, f"lstm.{layer}", hidden_states)
    hidden = hidden_states.shape[2]

    scores = ops.scale(ops.matmul(hidden_states, params["attention.query"]), 1.0 / np.sqrt(hidden))
    scores = ops.reshape(scores, (batch, length))
    alpha = ops.softmax(scores, axis=-1)
    if readout == "context":
        weighted = ops.mul(hidden_states, ops.reshape(alpha, (batch, length, 1)))
        features = ops.sum_(weighted, axis=1)
    else:
        features = scores
    logits = ops.reshape(linear(params, "head", features), (batch,))
    return ClassifierOutput(
        probability=ops.sigmoid(logits).data.copy(),
        attention=alpha.data.copy(),
        logits=logits,
    )


def classifier_loss(params: ModelParams, series: np.ndarray, labels: np.ndarray, readout: str = "context") -> Tensor:
    """Binary cross-entropy of the AD logit."""
    output = ta_lstm_forward(params, series, readout)
    return ops.bce_with_logits(output.logits, np.asarray(labels, dtype=np.float64))
