"""
Central finite-difference gradient checker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .params import ModelParams
from .tensor import Tensor, no_grad


@dataclass
class GradCheckReport:
    """Per-parameter norm-wise relative error between analytic and numeric gradients."""
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_error < tolerance

    def to_dict(self) -> dict:
        return {"errors": dict(self.errors), "max_error": self.max_error}


def numeric_gradient(
    loss_fn: Callable[[], Tensor],
    tensor: Tensor,
    h: float = 1e-5,
    indices: Iterable[tuple[int, ...]] | None = None,
) -> np.ndarray:
    """
    Central differences of ``loss_fn()`` with respect to entries of ``tensor``.

    Only ``indices`` are perturbed (every entry when None); the rest of the
    returned array is zero.
    """
    grad = np.zeros_like(tensor.data)
    base = tensor.data
    with no_grad():
        for idx in np.ndindex(base.shape) if indices is None else indices:
            bumped = base.copy()
            bumped[idx] = base[idx] + h
            tensor.data = bumped
            plus = loss_fn().item()
            bumped = base.copy()
            bumped[idx] = base[idx] - h
            tensor.data = bumped
            minus = loss_fn().item()
            grad[idx] = (plus - minus) / (2.0 * h)
    tensor.data = base
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    """
    ``|a - n| / (max(|a|, |n|) + floor)``.

    Below a tolerance ``tol`` this reads ``|a - n| < tol * max(|a|, |n|) + tol * floor``.
    """
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric)) + floor
    return float(np.linalg.norm(analytic - numeric) / scale)




def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: ModelParams,
    h: float = 1e-5,
    entries: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """
    Compare reverse-mode gradients of ``loss_fn`` with central differences.

    ``loss_fn`` must rebuild the graph on every call. With ``entries`` set,
    each parameter is checked on that many entries drawn without replacement
    (all of them when it has fewer).
    """
    params.zero_grad()
    loss_fn().backward()
    analytic = {name: (t.grad if t.grad is not None else np.zeros_like(t.data)) for name, t in params.items()}
    params.zero_grad()

    rng = np.random.default_rng(seed)
    report = GradCheckReport()
    for name, tensor in params.items():
        selected = np.ones(tensor.shape, dtype=bool)
        if entries is not None and entries < tensor.size:
            selected = np.zeros(tensor.size, dtype=bool)
            selected[rng.choice(tensor.size, size=entries, replace=False)] = True
            selected = selected.reshape(tensor.shape)
        numeric = numeric_gradient(loss_fn, tensor, h, [tuple(idx) for idx in np.argwhere(selected)])
        report.errors[name] = relative_error(analytic[name][selected], numeric[selected])
    return report
