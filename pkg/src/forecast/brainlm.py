"""
BrainLM-style masked transformer.

Temporal-only variant: every timestamp (all channels) is one token, there is
no spatial embedding. Masked positions are replaced by a learned mask token
before the encoder; a decoder with self- and cross-attention reconstructs
every position, and forecasting reads the reconstruction of the masked tail.
"""

import numpy as np

from src.config import BrainLmConfig
from src.errors import ShapeError
from src.numerics import ModelParams, Tensor, ops
from src.numerics.layers import (
    feed_forward,
    init_attention,
    init_feed_forward,
    init_layer_norm,
    init_linear,
    layer_norm,
    linear,
    multi_head_attention,
)
from src.numerics.params import uniform_init


def init_brainlm(
    config: BrainLmConfig | None = None,
    n_channels: int = 53,
    window: int = 24,
    seed: int = 0,
) -> ModelParams:
    config = config or BrainLmConfig()
    d = config.d_model
    d_ff = config.ff_multiplier * d
    rng = np.random.default_rng(seed)
    params = ModelParams()

    init_linear(params, rng, "embed", n_channels, d)
    params.add("pos_encoder", uniform_init(rng, (window, d), d))
    params.add("mask_token", uniform_init(rng, (d,), d))
    for i in range(config.n_encoder_layers):
        block = f"encoder.{i}"
        init_layer_norm(params, f"{block}.norm1", d)
        init_attention(params, rng, f"{block}.self_attn", d)
        init_layer_norm(params, f"{block}.norm2", d)
        init_feed_forward(params, rng, f"{block}.ff", d, d_ff)
    init_layer_norm(params, "encoder_norm", d)

    init_linear(params, rng, "decoder_in", d, d)
    params.add("pos_decoder", uniform_init(rng, (window, d), d))
    for i in range(config.n_decoder_layers):
        block = f"decoder.{i}"
        init_layer_norm(params, f"{block}.norm1", d)
        init_attention(params, rng, f"{block}.self_attn", d)
        init_layer_norm(params, f"{block}.norm2", d)
        init_attention(params, rng, f"{block}.cross_attn", d)
        init_layer_norm(params, f"{block}.norm3", d)
        init_feed_forward(params, rng, f"{block}.ff", d, d_ff)
    init_layer_norm(params, "decoder_norm", d)
    init_linear(params, rng, "head", d, n_channels)
    return params


def _n_blocks(params: ModelParams, prefix: str) -> int:
    return len({name.split(".")[1] for name in params if name.startswith(prefix + ".")})


def brainlm_forward(
    params: ModelParams,
    windows: np.ndarray,
    mask: np.ndarray,
    n_heads: int = 4,
    attention_log: list[np.ndarray] | None = None,
) -> Tensor:
    """
    Reconstruct ``windows`` [B x T x channels] with positions in ``mask`` hidden.

    Masked input values are zeroed before entering the graph and their
    embeddings replaced by the mask token, so they cannot influence the output.

    Returns:
        Tensor [B x T x channels]
    """
    windows = np.asarray(windows, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    n_channels = params["embed.weight"].shape[0]
    length = params["pos_encoder"].shape[0]
    if windows.ndim != 3 or windows.shape[1:] != (length, n_channels):
        raise ShapeError("brainlm_forward", [windows.shape], f"expected [B x {length} x {n_channels}]")
    if mask.shape != (length,):
        raise ShapeError("brainlm_forward", [windows.shape, mask.shape], f"mask must have shape ({length},)")

    token_mask = mask[None, :, None]
    positions = np.arange(length)
    visible = np.where(token_mask, 0.0, windows)

    x = linear(params, "embed", Tensor(visible))
    x = ops.where(token_mask, params["mask_token"], x)
    x = ops.add(x, ops.embedding(params["pos_encoder"], positions))
    for i in range(_n_blocks(params, "encoder")):
        block = f"encoder.{i}"
        h = layer_norm(params, f"{block}.norm1", x)
        x = ops.add(x, multi_head_attention(params, f"{block}.self_attn", h, h, n_heads, attention_log))
        x = ops.add(x, feed_forward(params, f"{block}.ff", layer_norm(params, f"{block}.norm2", x)))
    memory = layer_norm(params, "encoder_norm", x)

    y = ops.add(linear(params, "decoder_in", memory), ops.embedding(params["pos_decoder"], positions))
    for i in range(_n_blocks(params, "decoder")):
        block = f"decoder.{i}"
        h = layer_norm(params, f"{block}.norm1", y)
        y = ops.add(y, multi_head_attention(params, f"{block}.self_attn", h, h, n_heads, attention_log))
        h = layer_norm(params, f"{block}.norm2", y)
        y = ops.add(y, multi_head_attention(params, f"{block}.cross_attn", h, memory, n_heads, attention_log))
        y = ops.add(y, feed_forward(params, f"{block}.ff", layer_norm(params, f"{block}.norm3", y)))
    y = layer_norm(params, "decoder_norm", y)
    return linear(params, "head", y)


def reconstruction_loss(
    params: ModelParams,
    windows: np.ndarray,
    mask: np.ndarray,
    n_heads: int = 4,
    loss_on: str = "masked",
) -> Tensor:
    """MSE against the unmasked windows, on masked positions only or on all positions."""
    reconstruction = brainlm_forward(params, windows, mask, n_heads)
    position_mask = np.asarray(mask, dtype=bool)[None, :, None] if loss_on == "masked" else None
    return ops.mse(reconstruction, windows, position_mask)
