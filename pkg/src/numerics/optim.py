"""
Adam optimizer with bias correction.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from src.errors import GraphError

from .params import ModelParams


@dataclass
class AdamState:
    """First/second moment buffers and hyperparameters for one parameter set."""
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "step_count": self.step_count,
        }


def adam_step(
    params: ModelParams,
    grads: Mapping[str, np.ndarray | None],
    state: AdamState,
) -> AdamState:
    """
    Apply one Adam update to every parameter in place.

    Raises:
        GraphError: a parameter has no gradient, or its gradient shape differs
    """
    for name, tensor in params.items():
        g = grads.get(name)
        if g is None:
            raise GraphError(f"adam_step: missing gradient for parameter '{name}'")
        if g.shape != tensor.shape:
            raise GraphError(f"adam_step: gradient shape {g.shape} != parameter shape {tensor.shape} for '{name}'")

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t

    for name, tensor in params.items():
        g = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(tensor.data)
            v = np.zeros_like(tensor.data)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data = tensor.data - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)

    return state


class Adam:
    """Stateful wrapper that reads gradients straight from the parameters."""

    def __init__(
        self,
        params: ModelParams,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        self.params = params
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)

    def zero_grad(self) -> None:
        self.params.zero_grad()

    def step(self) -> None:
        adam_step(self.params, self.params.grads(), self.state)
