"""Feed-forward blocks built from named parameter groups."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.model.params import ParamStore, xavier_uniform


def linear(graph: ComputeGraph, x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return graph.add(graph.matmul(x, weight), bias)


@dataclass(frozen=True, slots=True)
class MLP:
    """ReLU hidden layers and a linear output, groups `<prefix>.l<i>.{w,b}`."""

    prefix: str
    widths: tuple[int, ...]

    @property
    def layers(self) -> int:
        return len(self.widths) - 1

    def group(self, layer: int, part: str) -> str:
        return f"{self.prefix}.l{layer}.{part}"

    def init(self, params: ParamStore, rng: np.random.Generator) -> None:
        for layer, (fan_in, fan_out) in enumerate(zip(self.widths[:-1], self.widths[1:])):
            params.add(self.group(layer, "w"), xavier_uniform(rng, fan_in, fan_out))
            params.add(self.group(layer, "b"), np.zeros((1, fan_out)))

    def __call__(self, graph: ComputeGraph, params: ParamStore, x: Tensor) -> Tensor:
        h = x
        for layer in range(self.layers):
            h = linear(graph, h, params[self.group(layer, "w")], params[self.group(layer, "b")])
            if layer < self.layers - 1:
                h = graph.relu(h)
        return h

    def output_bias(self, params: ParamStore) -> Tensor:
        return params[self.group(self.layers - 1, "b")]


__all__ = ["MLP", "linear"]
