"""Tape-based reverse-mode differentiation.

A `ComputeGraph` records every operation as it runs. `backward` walks the tape
in exact reverse insertion order, so operands always precede their consumers.
A graph is built per training sample and reset (or dropped) afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from src.lib.errors import ArgumentError, EmbeddingIndexError, ShapeError
from src.services.autograd.tensor import Tensor, ensure_finite, shape_str

BackwardRule = Callable[[np.ndarray, "GradientSink"], None]
ElementwiseKind = Literal["add", "sub", "hadamard", "scale", "relu", "sigmoid"]
ReduceKind = Literal["sum", "mean", "weighted_rowsum"]

WEIGHT_SUM_TOLERANCE = 1e-9
_SIGMOID_LOW = np.finfo(np.float64).tiny
_SIGMOID_HIGH = np.nextafter(1.0, 0.0)


@dataclass(slots=True)
class Node:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardRule


class GradientSink:
    """Routes gradient contributions during one backward traversal.

    Intermediate tensors accumulate into private buffers; trainable leaves
    accumulate straight into their `grad`; frozen tensors are ignored.
    """

    def __init__(self, produced: set[int]) -> None:
        self._produced = produced
        self.buffers: dict[int, np.ndarray] = {}

    def add(self, tensor: Tensor, value: np.ndarray) -> None:
        if not tensor.requires_grad:
            return
        key = id(tensor)
        if key in self._produced:
            current = self.buffers.get(key)
            self.buffers[key] = value.copy() if current is None else current + value
        else:
            tensor.accumulate(value)

    def add_rows(self, tensor: Tensor, ids: np.ndarray, rows: np.ndarray) -> None:
        if not tensor.requires_grad:
            return
        key = id(tensor)
        if key in self._produced:
            buffer = self.buffers.get(key)
            if buffer is None:
                buffer = np.zeros_like(tensor.data)
                self.buffers[key] = buffer
            np.add.at(buffer, ids, rows)
        else:
            tensor.accumulate_rows(ids, rows)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {shape_str(a)} vs {shape_str(b)}")


class ComputeGraph:
    """Append-only operation tape with the differentiable op set."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self._produced: set[int] = set()
        self._last_sink: GradientSink | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    def reset(self) -> None:
        self.nodes.clear()
        self._produced.clear()
        self._last_sink = None

    def record(
        self,
        op: str,
        inputs: Sequence[Tensor],
        values: np.ndarray,
        backward: BackwardRule,
    ) -> Tensor:
        """Register a node computing `values` from `inputs`; returns the output."""
        ensure_finite(values, op)
        output = Tensor.wrap(values, requires_grad=any(t.requires_grad for t in inputs))
        self.nodes.append(Node(op=op, inputs=tuple(inputs), output=output, backward=backward))
        self._produced.add(id(output))
        return output

    # -- linear algebra -------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.cols != b.rows:
            raise ShapeError(f"matmul: inner dimensions differ {shape_str(a)} x {shape_str(b)}")

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g @ b.data.T)
            sink.add(b, a.data.T @ g)

        return self.record("matmul", (a, b), a.data @ b.data, backward)

    def transpose(self, a: Tensor) -> Tensor:
        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g.T)

        return self.record("transpose", (a,), np.ascontiguousarray(a.data.T), backward)

    def reshape(self, a: Tensor, rows: int, cols: int) -> Tensor:
        if rows * cols != a.rows * a.cols:
            raise ShapeError(f"reshape: cannot view {shape_str(a)} as {rows}x{cols}")

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g.reshape(a.shape))

        return self.record("reshape", (a,), a.data.reshape(rows, cols).copy(), backward)

    def softmax_rows(self, a: Tensor) -> Tensor:
        shifted = a.data - a.data.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            dot = (g * probs).sum(axis=1, keepdims=True)
            sink.add(a, probs * (g - dot))

        return self.record("softmax_rows", (a,), probs, backward)

    # -- elementwise ----------------------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        _same_shape(a, b, "add")

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g)
            sink.add(b, g)

        return self.record("add", (a, b), a.data + b.data, backward)

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        _same_shape(a, b, "sub")

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g)
            sink.add(b, -g)

        return self.record("sub", (a, b), a.data - b.data, backward)

    def hadamard(self, a: Tensor, b: Tensor) -> Tensor:
        _same_shape(a, b, "hadamard")

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g * b.data)
            sink.add(b, g * a.data)

        return self.record("hadamard", (a, b), a.data * b.data, backward)

    def scale(self, a: Tensor, factor: float) -> Tensor:
        factor = float(factor)

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g * factor)

        return self.record("scale", (a,), a.data * factor, backward)

    def relu(self, a: Tensor) -> Tensor:
        mask = a.data > 0.0

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g * mask)

        return self.record("relu", (a,), np.where(mask, a.data, 0.0), backward)

    def sigmoid(self, a: Tensor) -> Tensor:
        out = sigmoid_values(a.data)

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g * out * (1.0 - out))

        return self.record("sigmoid", (a,), out, backward)

    def elementwise(
        self,
        kind: ElementwiseKind,
        a: Tensor,
        b: Tensor | None = None,
        *,
        factor: float | None = None,
    ) -> Tensor:
        """Dispatch one of the pointwise kinds by name."""
        if kind in ("add", "sub", "hadamard"):
            if b is None:
                raise ArgumentError(f"elementwise '{kind}' needs two operands")
            return getattr(self, kind)(a, b)
        if kind == "scale":
            if factor is None:
                raise ArgumentError("elementwise 'scale' needs a factor")
            return self.scale(a, factor)
        if kind == "relu":
            return self.relu(a)
        if kind == "sigmoid":
            return self.sigmoid(a)
        raise ArgumentError(f"Unknown elementwise kind '{kind}'")

    # -- structural -----------------------------------------------------

    def concat_cols(self, parts: Sequence[Tensor]) -> Tensor:
        if not parts:
            raise ArgumentError("concat_cols needs at least one part")
        for part in parts:
            if part.rows != 1:
                raise ShapeError(f"concat_cols: parts must be single-row, got {shape_str(part)}")
        bounds = np.cumsum([0] + [part.cols for part in parts])

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            for part, start, stop in zip(parts, bounds[:-1], bounds[1:]):
                sink.add(part, g[:, start:stop])

        values = np.concatenate([part.data for part in parts], axis=1)
        return self.record("concat_cols", tuple(parts), values, backward)

    def embedding_lookup(self, table: Tensor, ids: Sequence[int]) -> Tensor:
        if len(ids) == 0:
            raise ArgumentError("embedding_lookup needs at least one id")
        index = np.asarray(ids, dtype=np.int64)
        for value in index:
            if value < 0 or value >= table.rows:
                raise EmbeddingIndexError(
                    f"id {int(value)} out of range for table with {table.rows} rows"
                )

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add_rows(table, index, g)

        return self.record("embedding_lookup", (table,), table.data[index], backward)

    def scale_rows(self, a: Tensor, weights: Tensor) -> Tensor:
        """Multiply row i of `a` by weight i (weights shaped 1xn or nx1)."""
        if weights.rows * weights.cols != a.rows or 1 not in weights.shape:
            raise ShapeError(
                f"scale_rows: weights {shape_str(weights)} do not match {a.rows} rows"
            )
        column = weights.data.reshape(-1, 1)

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, g * column)
            sink.add(weights, (g * a.data).sum(axis=1).reshape(weights.shape))

        return self.record("scale_rows", (a, weights), a.data * column, backward)

    # -- reductions -----------------------------------------------------

    def sum(self, a: Tensor) -> Tensor:
        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, np.full(a.shape, g[0, 0]))

        return self.record("sum", (a,), np.array([[a.data.sum()]]), backward)

    def mean(self, a: Tensor) -> Tensor:
        """Mean over rows: n x k -> 1 x k."""
        rows = a.rows

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, np.repeat(g / rows, rows, axis=0))

        return self.record("mean", (a,), a.data.mean(axis=0, keepdims=True), backward)

    def weighted_rowsum(self, a: Tensor, weights: Tensor | Sequence[float]) -> Tensor:
        """Sum_i w_i * row_i -> 1 x k; weights must sum to one."""
        if not isinstance(weights, Tensor):
            weights = Tensor(np.asarray(weights, dtype=np.float64).reshape(1, -1))
        if weights.rows * weights.cols != a.rows or 1 not in weights.shape:
            raise ShapeError(
                f"weighted_rowsum: weights {shape_str(weights)} do not match {a.rows} rows"
            )
        total = float(weights.data.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ArgumentError(f"weighted_rowsum: weights sum to {total!r}, expected 1")
        row = weights.data.reshape(1, -1)

        def backward(g: np.ndarray, sink: GradientSink) -> None:
            sink.add(a, row.T @ g)
            sink.add(weights, (a.data @ g.T).reshape(weights.shape))

        return self.record("weighted_rowsum", (a, weights), row @ a.data, backward)

    def reduce(
        self,
        kind: ReduceKind,
        a: Tensor,
        weights: Tensor | Sequence[float] | None = None,
    ) -> Tensor:
        if kind == "sum":
            return self.sum(a)
        if kind == "mean":
            return self.mean(a)
        if kind == "weighted_rowsum":
            if weights is None:
                raise ArgumentError("reduce 'weighted_rowsum' needs weights")
            return self.weighted_rowsum(a, weights)
        raise ArgumentError(f"Unknown reduce kind '{kind}'")

    # -- differentiation ------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into every trainable leaf's `grad`.

        Gradients are added, never overwritten; callers zero them between steps.
        """
        if loss.shape != (1, 1):
            raise ArgumentError(f"backward needs a scalar loss, got {shape_str(loss)}")
        if not self.nodes or self.nodes[-1].output is not loss:
            raise ArgumentError("backward needs the loss to be the last recorded node")
        sink = GradientSink(self._produced)
        sink.buffers[id(loss)] = np.ones((1, 1))
        for node in reversed(self.nodes):
            if not node.output.requires_grad:
                continue
            grad = sink.buffers.get(id(node.output))
            if grad is None:
                continue
            node.backward(grad, sink)
        self._last_sink = sink

    def grad_of(self, tensor: Tensor) -> np.ndarray | None:
        """Gradient reaching `tensor` during the last backward pass."""
        if id(tensor) in self._produced:
            if self._last_sink is None:
                return None
            return self._last_sink.buffers.get(id(tensor))
        return tensor.grad


def sigmoid_values(values: np.ndarray) -> np.ndarray:
    """Logistic function kept strictly inside (0, 1)."""
    return np.clip(0.5 * (1.0 + np.tanh(0.5 * values)), _SIGMOID_LOW, _SIGMOID_HIGH)


def inverse_sqrt(dim: int) -> float:
    return 1.0 / math.sqrt(dim)


__all__ = ["ComputeGraph", "GradientSink", "Node", "inverse_sqrt", "sigmoid_values"]
