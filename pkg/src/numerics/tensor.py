"""
Tensor - define-by-run reverse-mode automatic differentiation.

A ``Tensor`` wraps a float64 NumPy array. Operations in ``ops`` build a tape
of ``Tensor`` nodes whenever an input requires gradients; ``backward`` walks
that tape once in reverse topological order and accumulates gradients into
the leaves. The tape is released afterwards, so each training step rebuilds
it with a fresh forward pass.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, Sequence

import numpy as np

from src.errors import GraphError

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Build no tape inside the block (per thread); used for inference."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Tensor:
    """
    Dense float64 tensor with optional gradient tracking.

    Values are treated as immutable once created; only ``grad`` (leaves) and
    a parameter's ``data`` (replaced wholesale by the optimizer) change.
    """

    __slots__ = ("data", "requires_grad", "grad", "op", "_parents", "_backward", "_released")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.op = "leaf"
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self._released = False

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        """Create an op output, recording the graph edge only if a parent needs grads."""
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.grad = None
        out.op = op
        out._released = False
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def values(self) -> np.ndarray:
        """Row-major flat view of the values."""
        return self.data.reshape(-1)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        if self.size != 1:
            raise GraphError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"

    # ------------------------------------------------------------------
    # Operator sugar (implemented in ops)
    # ------------------------------------------------------------------

    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    # ------------------------------------------------------------------
    # Reverse mode
    # ------------------------------------------------------------------

    def backward(self) -> None:
        """
        Populate ``grad`` on every leaf ancestor that requires gradients.

        Gradients from several paths (fan-out) are summed. Leaf gradients
        accumulate across calls until ``zero_grad``; the tape itself can only
        be walked once.
        """
        if self.size != 1:
            raise GraphError(f"backward needs a scalar loss, got shape {self.shape}")
        if self._released:
            raise GraphError("backward already ran on this graph; rebuild it with a new forward pass")
        if not self.requires_grad:
            raise GraphError("loss is detached: no input requires gradients")

        order = _topological_order(self)
        pending: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}

        for node in reversed(order):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = pending[key] + pg if key in pending else pg

        for node in order:
            if node._backward is not None:
                node._backward = None
                node._parents = ()
                node._released = True


def _topological_order(root: Tensor) -> list[Tensor]:
    """Iterative post-order DFS; recurrent graphs are too deep for recursion."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        if node._released:
            raise GraphError(f"graph through op '{node.op}' was already consumed by a previous backward")
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_tensor(value) -> Tensor:
    """Wrap arrays and scalars as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)
