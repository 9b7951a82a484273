"""Dense tensors, reverse-mode autodiff, layers and the Adam optimizer."""
from .tensor import Tensor, as_tensor, no_grad, is_grad_enabled
from .ops import (
    forward_op,
    matmul,
    add,
    sub,
    mul,
    scale,
    where,
    sigmoid,
    tanh,
    relu,
    softmax,
    layer_norm,
    mse,
    bce_with_logits,
    slice_,
    select,
    concat,
    stack,
    transpose,
    reshape,
    embedding,
    sum_,
    mean,
)
from .params import ModelParams, uniform_init
from .optim import Adam, AdamState, adam_step
from .checkpoint import encode_checkpoint, decode_checkpoint, write_checkpoint, read_checkpoint
from .gradcheck import GradCheckReport, check_gradients, numeric_gradient, relative_error

__all__ = [
    "Tensor",
    "as_tensor",
    "no_grad",
    "is_grad_enabled",
    "forward_op",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "where",
    "sigmoid",
    "tanh",
    "relu",
    "softmax",
    "layer_norm",
    "mse",
    "bce_with_logits",
    "slice_",
    "select",
    "concat",
    "stack",
    "transpose",
    "reshape",
    "embedding",
    "sum_",
    "mean",
    "ModelParams",
    "uniform_init",
    "Adam",
    "AdamState",
    "adam_step",
    "encode_checkpoint",
    "decode_checkpoint",
    "write_checkpoint",
    "read_checkpoint",
    "GradCheckReport",
    "check_gradients",
    "numeric_gradient",
    "relative_error",
]
