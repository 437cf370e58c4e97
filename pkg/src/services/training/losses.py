"""Task losses: graph nodes for training and numeric forms for reports."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from src.lib.errors import ArgumentError, ShapeError
from src.services.autograd.graph import ComputeGraph, GradientSink, sigmoid_values
from src.services.autograd.tensor import Tensor, shape_str

PROBABILITY_CLAMP = 1e-15


def bce_with_logits(graph: ComputeGraph, logit: Tensor, label: float) -> Tensor:
    """softplus(z) - y*z, the stable form of -[y log s(z) + (1-y) log(1-s(z))]."""
    if logit.shape != (1, 1):
        raise ShapeError(f"bce_with_logits needs a 1x1 logit, got {shape_str(logit)}")
    _check_binary([label])
    z = logit.data
    value = np.logaddexp(0.0, z) - label * z

    def backward(g: np.ndarray, sink: GradientSink) -> None:
        sink.add(logit, g * (sigmoid_values(z) - label))

    return graph.record("bce_with_logits", (logit,), value, backward)


def squared_error(graph: ComputeGraph, prediction: Tensor, target: float) -> Tensor:
    if prediction.shape != (1, 1):
        raise ShapeError(f"squared_error needs a 1x1 prediction, got {shape_str(prediction)}")
    diff = prediction.data - float(target)

    def backward(g: np.ndarray, sink: GradientSink) -> None:
        sink.add(prediction, g * 2.0 * diff)

    return graph.record("squared_error", (prediction,), diff * diff, backward)


def loss_node(graph: ComputeGraph, loss: str, output: Tensor, label: float) -> Tensor:
    if loss == "bce":
        return bce_with_logits(graph, output, label)
    if loss == "mse":
        return squared_error(graph, output, label)
    raise ArgumentError(f"Unknown loss '{loss}'")


def _check_binary(labels: Sequence[float]) -> None:
    for label in labels:
        if label not in (0.0, 1.0):
            raise ArgumentError(f"BCE labels must be 0 or 1, got {label!r}")


def _as_pair(preds: Sequence[float], truths: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=np.float64).ravel()
    y = np.asarray(truths, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise ArgumentError(f"Length mismatch: {p.size} predictions vs {y.size} targets")
    return p, y


def bce_loss(preds: Sequence[float], labels: Sequence[float], *, from_logits: bool = False) -> float:
    """Mean binary cross-entropy over a batch of probabilities or logits."""
    p, y = _as_pair(preds, labels)
    _check_binary(y.tolist())
    if p.size == 0:
        return 0.0
    if from_logits:
        return float(np.mean(np.logaddexp(0.0, p) - y * p))
    p = np.clip(p, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def mse_loss(preds: Sequence[float], truths: Sequence[float]) -> float:
    p, y = _as_pair(preds, truths)
    if p.size == 0:
        return 0.0
    return float(np.mean((p - y) ** 2))


__all__ = ["bce_loss", "bce_with_logits", "loss_node", "mse_loss", "squared_error"]
