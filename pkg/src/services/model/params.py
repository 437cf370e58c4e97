"""Named parameter groups with a per-group trainable mask."""

from __future__ import annotations

import logging
import math
from typing import Iterable, Iterator

import numpy as np

from src.lib.errors import ConfigError, ShapeError
from src.services.autograd.tensor import Tensor

logger = logging.getLogger(__name__)

EMBEDDING_SCALE = 0.1


def uniform_embedding(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.uniform(-EMBEDDING_SCALE, EMBEDDING_SCALE, (rows, cols))


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


class ParamStore:
    """Ordered mapping of group name to leaf tensor.

    Insertion order is the checkpoint order. A group is trainable exactly when
    its tensor has `requires_grad` set.
    """

    def __init__(self) -> None:
        self._groups: dict[str, Tensor] = {}

    def add(self, name: str, data: np.ndarray, *, trainable: bool = True) -> Tensor:
        if name in self._groups:
            raise ConfigError(f"Parameter group '{name}' defined twice")
        tensor = Tensor(data, requires_grad=trainable, name=name)
        self._groups[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._groups[name]
        except KeyError:
            raise ConfigError(f"Parameter group '{name}' not found") from None

    def __contains__(self, name: object) -> bool:
        return name in self._groups

    def __iter__(self) -> Iterator[str]:
        return iter(self._groups)

    def __len__(self) -> int:
        return len(self._groups)

    @property
    def names(self) -> list[str]:
        return list(self._groups)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._groups.items())

    @property
    def trainable_mask(self) -> dict[str, bool]:
        return {name: tensor.requires_grad for name, tensor in self._groups.items()}

    def trainable_names(self) -> list[str]:
        return [name for name, tensor in self._groups.items() if tensor.requires_grad]

    def set_trainable(self, names: Iterable[str]) -> None:
        """Make exactly `names` trainable; every other group is frozen."""
        keep = set(names)
        unknown = keep - set(self._groups)
        if unknown:
            raise ConfigError(f"Parameter group '{sorted(unknown)[0]}' not found")
        for name, tensor in self._groups.items():
            tensor.requires_grad = name in keep
        logger.debug("Trainable groups: %s", ", ".join(sorted(keep)) or "(none)")

    def freeze(self, names: Iterable[str]) -> None:
        for name in names:
            self[name].requires_grad = False

    def zero_grad(self) -> None:
        for tensor in self._groups.values():
            tensor.grad = None

    def append_rows(self, name: str, rows: np.ndarray) -> None:
        tensor = self[name]
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != tensor.cols:
            raise ShapeError(f"Cannot append rows of shape {rows.shape} to '{name}' ({tensor.cols} cols)")
        tensor.data = np.vstack([tensor.data, rows])
        tensor.grad = None

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self._groups.items()}

    def copy(self) -> "ParamStore":
        clone = ParamStore()
        for name, tensor in self._groups.items():
            clone.add(name, tensor.data, trainable=tensor.requires_grad)
        return clone

    def count(self) -> int:
        return int(sum(tensor.data.size for tensor in self._groups.values()))


__all__ = ["EMBEDDING_SCALE", "ParamStore", "uniform_embedding", "xavier_uniform"]
