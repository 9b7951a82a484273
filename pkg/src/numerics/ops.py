"""
Differentiable primitives.

Every function takes ``Tensor`` (or array-like constant) inputs, computes the
forward value with NumPy and attaches a closure returning the gradient of
each input. Broadcasting follows NumPy; gradients are summed back to the
input shape.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from src.errors import ShapeError

from .tensor import Tensor, as_tensor


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of NumPy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op: str, *tensors: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(*(t.shape for t in tensors))
    except ValueError:
        raise ShapeError(op, [t.shape for t in tensors], "not broadcastable") from None


# ----------------------------------------------------------------------
# Elementwise arithmetic
# ----------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), backward, "mul")


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = float(factor)

    def backward(g):
        return (g * factor,)

    return Tensor.from_op(a.data * factor, (a,), backward, "scale")


def where(mask: np.ndarray, a, b) -> Tensor:
    """Select ``a`` where ``mask`` is true, else ``b``; ``mask`` is a constant."""
    a, b = as_tensor(a), as_tensor(b)
    mask = np.asarray(mask, dtype=bool)
    try:
        np.broadcast_shapes(mask.shape, a.shape, b.shape)
    except ValueError:
        raise ShapeError("where", [mask.shape, a.shape, b.shape], "not broadcastable") from None

    def backward(g):
        return (
            _unbroadcast(np.where(mask, g, 0.0), a.shape),
            _unbroadcast(np.where(mask, 0.0, g), b.shape),
        )

    return Tensor.from_op(np.where(mask, a.data, b.data), (a, b), backward, "where")


# ----------------------------------------------------------------------
# Linear algebra and shape manipulation
# ----------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Batched matrix product over the last two axes; both operands need rank >= 2."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", [a.shape, b.shape], "need [..., n, k] @ [..., k, m]")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError("matmul", [a.shape, b.shape], "batch dims not broadcastable") from None

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor.from_op(out, (a, b), backward, "matmul")


def transpose(a, axes: Sequence[int] | None = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError("transpose", [a.shape], f"invalid axes {axes}")
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return Tensor.from_op(np.transpose(a.data, axes), (a,), backward, "transpose")


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError("reshape", [a.shape], f"cannot reshape to {tuple(shape)}") from None

    def backward(g):
        return (g.reshape(a.shape),)

    return Tensor.from_op(out, (a,), backward, "reshape")


def slice_(a, start: int, stop: int, axis: int = -1) -> Tensor:
    """Contiguous slice ``[start:stop]`` along ``axis``."""
    a = as_tensor(a)
    axis = axis % a.ndim if a.ndim else 0
    if a.ndim == 0 or not 0 <= start <= stop <= a.shape[axis]:
        raise ShapeError("slice", [a.shape], f"range [{start}:{stop}] on axis {axis}")
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return Tensor.from_op(a.data[index], (a,), backward, "slice")


def select(a, index: int, axis: int) -> Tensor:
    """Pick one position along ``axis`` and drop that axis."""
    a = as_tensor(a)
    axis = axis % a.ndim
    return reshape(slice_(a, index, index + 1, axis), a.shape[:axis] + a.shape[axis + 1:])


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat", [], "no inputs")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("concat", [t.shape for t in tensors], f"axis {axis}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor.from_op(out, tensors, backward, "concat")


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("stack", [], "no inputs")
    try:
        out = np.stack([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("stack", [t.shape for t in tensors], f"axis {axis}") from None

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return Tensor.from_op(out, tensors, backward, "stack")


def embedding(table, ids: np.ndarray) -> Tensor:
    """Row lookup ``table[ids]``; repeated ids accumulate gradient."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2 or (ids.size and (ids.min() < 0 or ids.max() >= table.shape[0])):
        raise ShapeError("embedding", [table.shape, ids.shape], "ids out of range for table")

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return Tensor.from_op(table.data[ids], (table,), backward, "embedding")


# ----------------------------------------------------------------------
# Reductions
# ----------------------------------------------------------------------

def sum_(a, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor.from_op(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward, "sum")


def mean(a, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return scale(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


# ----------------------------------------------------------------------
# Nonlinearities
# ----------------------------------------------------------------------

def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = expit(a.data)

    def backward(g):
        return (g * out * (1.0 - out),)

    return Tensor.from_op(out, (a,), backward, "sigmoid")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)

    def backward(g):
        return (g * (1.0 - out * out),)

    return Tensor.from_op(out, (a,), backward, "tanh")


def relu(a) -> Tensor:
    a = as_tensor(a)
    positive = a.data > 0

    def backward(g):
        return (g * positive,)

    return Tensor.from_op(np.where(positive, a.data, 0.0), (a,), backward, "relu")


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(out, (a,), backward, "softmax")


def layer_norm(a, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply the affine ``gamma``/``beta``."""
    a, gamma, beta = as_tensor(a), as_tensor(gamma), as_tensor(beta)
    width = a.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise ShapeError("layer_norm", [a.shape, gamma.shape, beta.shape], "affine must match last axis")
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    inv = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv

    def backward(g):
        dxhat = g * gamma.data
        dx = inv / width * (
            width * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )
        lead = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return Tensor.from_op(xhat * gamma.data + beta.data, (a, gamma, beta), backward, "layer_norm")


# ----------------------------------------------------------------------
# Recurrent
# ----------------------------------------------------------------------

def lstm_sequence(x, w_ih, w_hh, bias) -> Tensor:
    """
    One LSTM layer over ``x`` [B, T, in] from a zero state.

    Gate weights are fused in (input, forget, cell, output) order:
    ``w_ih`` [in, 4H], ``w_hh`` [H, 4H], ``bias`` [4H]. Returns the hidden
    state at every step, [B, T, H]. The whole recurrence is one tape node;
    backward is backpropagation through time over the cached gates.
    """
    x, w_ih, w_hh, bias = as_tensor(x), as_tensor(w_ih), as_tensor(w_hh), as_tensor(bias)
    if x.ndim != 3:
        raise ShapeError("lstm_sequence", [x.shape], "input must be [B, T, in]")
    batch, length, n_in = x.shape
    hidden = w_hh.shape[0]
    if w_ih.shape != (n_in, 4 * hidden) or w_hh.shape != (hidden, 4 * hidden) or bias.shape != (4 * hidden,):
        raise ShapeError(
            "lstm_sequence",
            [x.shape, w_ih.shape, w_hh.shape, bias.shape],
            f"expected weight_ih ({n_in}, {4 * hidden}), weight_hh ({hidden}, {4 * hidden}), bias ({4 * hidden},)",
        )
    if length < 1:
        raise ShapeError("lstm_sequence", [x.shape], "sequence must have at least one step")

    projected = np.matmul(x.data, w_ih.data) + bias.data
    gates = np.empty((batch, length, 4 * hidden))
    cells = np.empty((batch, length, hidden))
    states = np.empty((batch, length, hidden))
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    for t in range(length):
        z = projected[:, t] + h @ w_hh.data
        gates[:, t, :2 * hidden] = expit(z[:, :2 * hidden])
        gates[:, t, 2 * hidden:3 * hidden] = np.tanh(z[:, 2 * hidden:3 * hidden])
        gates[:, t, 3 * hidden:] = expit(z[:, 3 * hidden:])
        i, f, g, o = np.split(gates[:, t], 4, axis=1)
        c = f * c + i * g
        h = o * np.tanh(c)
        cells[:, t] = c
        states[:, t] = h

    def backward(grad):
        d_z = np.empty_like(gates)
        dh_next = np.zeros((batch, hidden))
        dc_next = np.zeros((batch, hidden))
        for t in reversed(range(length)):
            i, f, g, o = np.split(gates[:, t], 4, axis=1)
            c_prev = cells[:, t - 1] if t > 0 else np.zeros((batch, hidden))
            tanh_c = np.tanh(cells[:, t])
            dh = grad[:, t] + dh_next
            dc = dc_next + dh * o * (1.0 - tanh_c ** 2)
            d_z[:, t, :hidden] = dc * g * i * (1.0 - i)
            d_z[:, t, hidden:2 * hidden] = dc * c_prev * f * (1.0 - f)
            d_z[:, t, 2 * hidden:3 * hidden] = dc * i * (1.0 - g ** 2)
            d_z[:, t, 3 * hidden:] = dh * tanh_c * o * (1.0 - o)
            dh_next = d_z[:, t] @ w_hh.data.T
            dc_next = dc * f
        previous = np.concatenate([np.zeros((batch, 1, hidden)), states[:, :-1]], axis=1)
        flat_dz = d_z.reshape(-1, 4 * hidden)
        return (
            np.matmul(d_z, w_ih.data.T) if x.requires_grad else None,
            x.data.reshape(-1, n_in).T @ flat_dz,
            previous.reshape(-1, hidden).T @ flat_dz,
            flat_dz.sum(axis=0),
        )

    return Tensor.from_op(states, (x, w_ih, w_hh, bias), backward, "lstm_sequence")


# ----------------------------------------------------------------------
# Losses
# ----------------------------------------------------------------------

def mse(pred, target, mask: np.ndarray | None = None) -> Tensor:
    """
    Mean squared error, optionally restricted to the positions where
    ``mask`` (broadcastable to ``pred``) is true.
    """
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError("mse", [pred.shape, target.shape], "prediction and target differ")
    if mask is None:
        weight = np.ones_like(pred.data)
    else:
        try:
            weight = np.broadcast_to(np.asarray(mask, dtype=bool), pred.shape).astype(np.float64)
        except ValueError:
            raise ShapeError("mse", [pred.shape, np.shape(mask)], "mask not broadcastable") from None
    count = weight.sum()
    if count == 0:
        raise ShapeError("mse", [pred.shape], "mask selects no elements")
    diff = (pred.data - target.data) * weight

    def backward(g):
        d = 2.0 * g * diff / count
        return d, -d

    return Tensor.from_op(np.array((diff * diff).sum() / count), (pred, target), backward, "mse")


def bce_with_logits(logits, labels) -> Tensor:
    """Mean binary cross-entropy on raw logits (numerically stable form)."""
    logits, labels = as_tensor(logits), as_tensor(labels)
    if logits.shape != labels.shape:
        raise ShapeError("bce_with_logits", [logits.shape, labels.shape])
    z, y = logits.data, labels.data
    losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    n = z.size

    def backward(g):
        return g * (expit(z) - y) / n, g * (-z) / n

    return Tensor.from_op(np.array(losses.mean()), (logits, labels), backward, "bce_with_logits")


OPS: dict[str, Callable[..., Tensor]] = {
    "matmul": matmul,
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "where": where,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "softmax": softmax,
    "layer_norm": layer_norm,
    "lstm_sequence": lstm_sequence,
    "mse": mse,
    "bce_with_logits": bce_with_logits,
    "slice": slice_,
    "select": select,
    "concat": concat,
    "stack": stack,
    "transpose": transpose,
    "reshape": reshape,
    "embedding": embedding,
    "sum": sum_,
    "mean": mean,
}


_ALIASES = {"softmax_over_axis": "softmax", "embedding_lookup": "embedding"}


def forward_op(op: str, *inputs, **kwargs) -> Tensor:
    """Dispatch a primitive by name (``"layer-norm"`` and ``"layer_norm"`` both work)."""
    key = op.replace("-", "_")
    key = _ALIASES.get(key, key)
    fn = OPS.get(key)
    if fn is None:
        raise ShapeError(op, [getattr(t, "shape", ()) for t in inputs], f"unknown op; known: {sorted(OPS)}")
    return fn(*inputs, **kwargs)
