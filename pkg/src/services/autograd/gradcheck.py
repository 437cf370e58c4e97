"""Central finite-difference verification of backward rules."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from src.lib.errors import ArgumentError
from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor

logger = logging.getLogger(__name__)

LossFn = Callable[[ComputeGraph], Tensor]
DENOMINATOR_FLOOR = 1e-8


def _evaluate(fn: LossFn) -> float:
    graph = ComputeGraph()
    loss = fn(graph)
    if loss.shape != (1, 1):
        raise ArgumentError(f"grad_check needs a scalar function, got {loss.rows}x{loss.cols}")
    return loss.item()


def grad_check(
    fn: LossFn,
    inputs: Tensor | Sequence[Tensor],
    eps: float = 1e-5,
    floor: float = DENOMINATOR_FLOOR,
) -> float:
    """Return the max relative error between analytic and numeric gradients.

    Entries smaller than `floor` are compared on an absolute scale.
    `fn` builds its loss on the graph it is given and must read the checked
    tensors by reference, so perturbing `tensor.data` in place changes its value.
    """
    if eps <= 0:
        raise ArgumentError(f"eps must be positive, got {eps}")
    if floor <= 0:
        raise ArgumentError(f"floor must be positive, got {floor}")
    tensors = [inputs] if isinstance(inputs, Tensor) else list(inputs)
    saved = [(tensor.requires_grad, tensor.grad) for tensor in tensors]
    try:
        for tensor in tensors:
            tensor.requires_grad = True
            tensor.grad = None
        graph = ComputeGraph()
        loss = fn(graph)
        graph.backward(loss)
        analytic = [
            tensor.grad.copy() if tensor.grad is not None else np.zeros_like(tensor.data)
            for tensor in tensors
        ]

        worst = 0.0
        for tensor, grad in zip(tensors, analytic):
            for index in np.ndindex(*tensor.shape):
                original = tensor.data[index]
                tensor.data[index] = original + eps
                upper = _evaluate(fn)
                tensor.data[index] = original - eps
                lower = _evaluate(fn)
                tensor.data[index] = original
                numeric = (upper - lower) / (2.0 * eps)
                exact = grad[index]
                denominator = max(abs(exact), abs(numeric), floor)
                worst = max(worst, abs(exact - numeric) / denominator)
        logger.debug("grad_check over %d tensors: max relative error %.3e", len(tensors), worst)
        return worst
    finally:
        for tensor, (flag, grad) in zip(tensors, saved):
            tensor.requires_grad = flag
            tensor.grad = grad


__all__ = ["DENOMINATOR_FLOOR", "grad_check"]
