"""
Neural-network building blocks shared by the forecasters and the classifier.

Parameters live in a flat ``ModelParams`` under dotted names
(``"encoder.0.attn.q.weight"``); each ``init_*`` adds a block's parameters
and the matching function runs it.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .params import ModelParams, uniform_init
from .tensor import Tensor


def init_linear(params: ModelParams, rng: np.random.Generator, name: str, fan_in: int, fan_out: int) -> None:
    params.add(f"{name}.weight", uniform_init(rng, (fan_in, fan_out), fan_in))
    params.add(f"{name}.bias", uniform_init(rng, (fan_out,), fan_in))


def linear(params: ModelParams, name: str, x) -> Tensor:
    return ops.add(ops.matmul(x, params[f"{name}.weight"]), params[f"{name}.bias"])


def init_layer_norm(params: ModelParams, name: str, width: int) -> None:
    params.add(f"{name}.gamma", np.ones(width))
    params.add(f"{name}.beta", np.zeros(width))


def layer_norm(params: ModelParams, name: str, x) -> Tensor:
    return ops.layer_norm(x, params[f"{name}.gamma"], params[f"{name}.beta"])


# ----------------------------------------------------------------------
# LSTM
# ----------------------------------------------------------------------

def init_lstm(
    params: ModelParams,
    rng: np.random.Generator,
    name: str,
    input_size: int,
    hidden: int,
    forget_bias: float = 1.0,
) -> None:
    """Fused gate weights in (input, forget, cell, output) order."""
    params.add(f"{name}.weight_ih", uniform_init(rng, (input_size, 4 * hidden), input_size))
    params.add(f"{name}.weight_hh", uniform_init(rng, (hidden, 4 * hidden), hidden))
    bias = np.zeros(4 * hidden)
    bias[hidden:2 * hidden] = forget_bias
    params.add(f"{name}.bias", bias)


def lstm_layer(params: ModelParams, name: str, inputs) -> Tensor:
    """
    Run one LSTM layer over ``inputs`` [B, T, in].

    State starts at zero for every call (stateless). Returns the hidden
    state at every step, [B, T, hidden].
    """
    return ops.lstm_sequence(inputs, params[f"{name}.weight_ih"], params[f"{name}.weight_hh"], params[f"{name}.bias"])


# ----------------------------------------------------------------------
# Transformer pieces
# ----------------------------------------------------------------------

def init_attention(params: ModelParams, rng: np.random.Generator, name: str, d_model: int) -> None:
    for proj in ("q", "k", "v", "out"):
        init_linear(params, rng, f"{name}.{proj}", d_model, d_model)


def multi_head_attention(
    params: ModelParams,
    name: str,
    query: Tensor,
    memory: Tensor,
    n_heads: int,
    attention_log: list[np.ndarray] | None = None,
) -> Tensor:
    """Scaled dot-product attention of ``query`` [B, Tq, d] over ``memory`` [B, Tk, d]."""
    batch, t_q, d_model = query.shape
    t_k = memory.shape[1]
    head_dim = d_model // n_heads

    def heads(x: Tensor, length: int) -> Tensor:
        return ops.transpose(ops.reshape(x, (batch, length, n_heads, head_dim)), (0, 2, 1, 3))

    q = heads(linear(params, f"{name}.q", query), t_q)
    k = heads(linear(params, f"{name}.k", memory), t_k)
    v = heads(linear(params, f"{name}.v", memory), t_k)
    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(head_dim))
    weights = ops.softmax(scores, axis=-1)
    if attention_log is not None:
        attention_log.append(weights.data)
    context = ops.reshape(ops.transpose(ops.matmul(weights, v), (0, 2, 1, 3)), (batch, t_q, d_model))
    return linear(params, f"{name}.out", context)


def init_feed_forward(params: ModelParams, rng: np.random.Generator, name: str, d_model: int, d_ff: int) -> None:
    init_linear(params, rng, f"{name}.in", d_model, d_ff)
    init_linear(params, rng, f"{name}.out", d_ff, d_model)


def feed_forward(params: ModelParams, name: str, x: Tensor) -> Tensor:
    return linear(params, f"{name}.out", ops.relu(linear(params, f"{name}.in", x)))
