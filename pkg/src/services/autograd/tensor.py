"""Dense 2-D float64 tensor with an optional gradient buffer."""

from __future__ import annotations

from typing import Any

import numpy as np

from src.lib.errors import NonFiniteError, ShapeError


def ensure_finite(values: np.ndarray, op: str) -> None:
    if not np.isfinite(values).all():
        raise NonFiniteError(f"Operation '{op}' produced non-finite values")


class Tensor:
    """Row-major matrix of 64-bit floats.

    Every quantity in the network is a matrix or a row vector, so tensors are
    always 2-D: scalars are 1x1 and vectors are 1xk.
    """

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(
        self,
        data: Any,
        *,
        requires_grad: bool = False,
        name: str | None = None,
        copy: bool = True,
    ) -> None:
        array = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1, 1)
        elif array.ndim == 1:
            array = array.reshape(1, -1)
        elif array.ndim != 2:
            raise ShapeError(f"Tensor must be 2-D, got shape {array.shape}")
        ensure_finite(array, name or "tensor")
        self.data: np.ndarray = array
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def zeros(cls, rows: int, cols: int, **kwargs: Any) -> "Tensor":
        return cls(np.zeros((rows, cols)), copy=False, **kwargs)

    @classmethod
    def wrap(cls, array: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Adopt an already-validated array without copying (op outputs)."""
        tensor = cls.__new__(cls)
        tensor.data = array
        tensor.grad = None
        tensor.requires_grad = requires_grad
        tensor.name = None
        return tensor

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.rows}x{self.cols}")
        return float(self.data[0, 0])

    def accumulate(self, value: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(value, dtype=np.float64, copy=True)
        else:
            self.grad += value

    def accumulate_rows(self, ids: np.ndarray, rows: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        np.add.at(self.grad, ids, rows)

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def copy(self) -> "Tensor":
        clone = Tensor(self.data, requires_grad=self.requires_grad, name=self.name)
        return clone

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor({self.rows}x{self.cols}{label}, requires_grad={self.requires_grad})"


def shape_str(tensor: Tensor) -> str:
    return f"{tensor.rows}x{tensor.cols}"


__all__ = ["Tensor", "ensure_finite", "shape_str"]
