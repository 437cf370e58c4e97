"""Domain encoder g(.) and prediction head h(.)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from src.services.autograd.graph import ComputeGraph, sigmoid_values
from src.services.autograd.tensor import Tensor
from src.services.model.config import ModelConfig
from src.services.model.layers import MLP
from src.services.model.params import ParamStore


def encoder_mlp(config: ModelConfig) -> MLP:
    k = config.embed_dim
    return MLP("encoder", (config.channels * k + k, *config.encoder_hidden, k))


def head_mlp(config: ModelConfig) -> MLP:
    k = config.embed_dim
    return MLP("head", ((config.channels + 3) * k, *config.head_hidden, 1))


def encode_user(
    graph: ComputeGraph,
    params: ParamStore,
    config: ModelConfig,
    channel_outputs: Sequence[Tensor],
    e_d: Tensor,
) -> Tensor:
    """Transferred target user embedding from the pooled channels and the domain."""
    return encoder_mlp(config)(graph, params, graph.concat_cols([*channel_outputs, e_d]))


def head_input(
    graph: ComputeGraph,
    user: Tensor,
    channel_outputs: Sequence[Tensor],
    e_v: Tensor,
    e_d: Tensor,
) -> Tensor:
    return graph.concat_cols([user, *channel_outputs, e_v, e_d])


def head_output(graph: ComputeGraph, params: ParamStore, config: ModelConfig, features: Tensor) -> Tensor:
    """Raw 1x1 head output: a logit in logit mode, the rating otherwise."""
    return head_mlp(config)(graph, params, features)


def predict(
    graph: ComputeGraph,
    params: ParamStore,
    config: ModelConfig,
    user: Tensor,
    channel_outputs: Sequence[Tensor],
    e_v: Tensor,
    e_d: Tensor,
) -> tuple[float, Tensor]:
    """Return (prediction, raw output node)."""
    raw = head_output(graph, params, config, head_input(graph, user, channel_outputs, e_v, e_d))
    return output_value(config, raw.item()), raw


def output_value(config: ModelConfig, raw: float) -> float:
    if config.output_mode == "logit":
        return float(sigmoid_values(np.array(raw)))
    return float(raw)


__all__ = [
    "encode_user",
    "encoder_mlp",
    "head_input",
    "head_mlp",
    "head_output",
    "output_value",
    "predict",
]
