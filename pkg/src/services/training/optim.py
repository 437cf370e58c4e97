"""First-order optimizers over a ParamStore.

Frozen groups (requires_grad unset) and groups without a gradient are skipped.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod

import numpy as np

from src.lib.errors import TrainingError
from src.services.autograd.tensor import Tensor
from src.services.model.params import ParamStore
from src.services.training.config import TrainConfig

logger = logging.getLogger(__name__)


class Optimizer(ABC):
    def __init__(self, lr: float) -> None:
        self.lr = lr
        self.steps = 0

    def step(self, params: ParamStore) -> None:
        self.steps += 1
        for name, tensor in params.items():
            if not tensor.requires_grad or tensor.grad is None:
                continue
            if not np.isfinite(tensor.grad).all():
                raise TrainingError(f"Non-finite gradient in parameter group '{name}'")
            self._update(name, tensor)

    @abstractmethod
    def _update(self, name: str, tensor: Tensor) -> None: ...


class SGD(Optimizer):
    def _update(self, name: str, tensor: Tensor) -> None:
        tensor.data -= self.lr * tensor.grad


class Adam(Optimizer):
    """Adam with bias correction; moments persist per group across steps."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        super().__init__(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._state: dict[str, tuple[np.ndarray, np.ndarray, int]] = {}

    def _update(self, name: str, tensor: Tensor) -> None:
        grad = tensor.grad
        state = self._state.get(name)
        if state is None or state[0].shape != grad.shape:
            state = (np.zeros_like(grad), np.zeros_like(grad), 0)
        m, v, t = state
        t += 1
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
        m_hat = m / (1.0 - self.beta1**t)
        v_hat = v / (1.0 - self.beta2**t)
        tensor.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self._state[name] = (m, v, t)


def build_optimizer(config: TrainConfig) -> Optimizer:
    if config.optimizer == "sgd":
        return SGD(config.lr)
    return Adam(config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps)


__all__ = ["Adam", "Optimizer", "SGD", "build_optimizer"]
