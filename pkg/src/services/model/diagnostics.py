"""Gradient diagnostics for the user-embedding imbalance comparison."""

from __future__ import annotations

import numpy as np

from src.lib.errors import StateError
from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.model.params import ParamStore


def gradient_norm_report(params: ParamStore) -> dict[str, float]:
    """L2 norm of the accumulated gradient of every group; frozen groups are 0."""
    trainable = params.trainable_names()
    if not any(params[name].grad is not None for name in trainable):
        raise StateError("gradient_norm_report needs a completed backward pass")
    report: dict[str, float] = {}
    for name, tensor in params.items():
        if not tensor.requires_grad or tensor.grad is None:
            report[name] = 0.0
        else:
            report[name] = float(np.linalg.norm(tensor.grad))
    return report


def user_embedding_share(graph: ComputeGraph, head_input: Tensor, embed_dim: int) -> float:
    """Share of the head-input gradient norm carried by the user-embedding slot."""
    grad = graph.grad_of(head_input)
    if grad is None:
        raise StateError("user_embedding_share needs a completed backward pass")
    total = float(np.linalg.norm(grad))
    if total == 0.0:
        return 0.0
    return float(np.linalg.norm(grad[:, :embed_dim])) / total


__all__ = ["gradient_norm_report", "user_embedding_share"]
