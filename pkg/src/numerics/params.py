"""
Named parameter collections and parameter initialization.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from pathlib import Path

import numpy as np

from .tensor import Tensor


class ModelParams(Mapping[str, Tensor]):
    """
    Ordered name -> Tensor mapping for one model.

    Insertion order is the checkpoint order, so two models built the same way
    serialize to identical bytes.
    """

    def __init__(self, arrays: Mapping[str, np.ndarray] | None = None):
        self._tensors: dict[str, Tensor] = {}
        for name, value in (arrays or {}).items():
            self.add(name, value)

    def add(self, name: str, value) -> Tensor:
        if name in self._tensors:
            raise KeyError(f"duplicate parameter name: {name}")
        tensor = Tensor(value.data if isinstance(value, Tensor) else value, requires_grad=True)
        self._tensors[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    @property
    def n_parameters(self) -> int:
        return int(sum(t.size for t in self._tensors.values()))

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._tensors.items()}

    def grads(self) -> dict[str, np.ndarray | None]:
        return {name: t.grad for name, t in self._tensors.items()}

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.grad = None

    def copy(self) -> "ModelParams":
        return ModelParams(self.arrays())

    def assign(self, arrays: Mapping[str, np.ndarray]) -> None:
        """Overwrite values in place (shapes must match)."""
        for name, value in arrays.items():
            current = self._tensors[name]
            value = np.asarray(value, dtype=np.float64)
            if value.shape != current.shape:
                raise ValueError(f"{name}: shape {value.shape} != {current.shape}")
            current.data = value.copy()

    def is_finite(self) -> bool:
        return all(np.isfinite(t.data).all() for t in self._tensors.values())

    def equals(self, other: "ModelParams") -> bool:
        """Bitwise equality of names, order, shapes and values."""
        if list(self) != list(other):
            return False
        return all(np.array_equal(self[n].data, other[n].data) for n in self)

    def save(self, path: str | Path) -> Path:
        from .checkpoint import write_checkpoint
        return write_checkpoint(path, self.arrays())

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        from .checkpoint import read_checkpoint
        return cls(read_checkpoint(path))


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """U(-a, a) with a = 1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)
