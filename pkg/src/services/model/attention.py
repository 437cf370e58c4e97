"""Two-step domain-aware cross-attention over one sequence channel.

Step one weighs sequence positions against the target-domain embedding and
step two against the target item embedding. Under the default `gated`
semantics the softmax runs over the n sequence positions, with the domain
or item vector as the single attended-against key. `literal` semantics take
keys and values from that single vector, so the softmax runs over one key and
every output row collapses to its value projection.
"""

from __future__ import annotations

import numpy as np

from src.lib.errors import ArgumentError
from src.services.autograd.graph import ComputeGraph, inverse_sqrt
from src.services.autograd.tensor import Tensor
from src.services.model.config import ModelConfig
from src.services.model.params import ParamStore, xavier_uniform


def attention_group(channel: int, step: int, part: str) -> str:
    return f"attn.c{channel}.s{step}.{part}"


def init_attention(params: ParamStore, config: ModelConfig, rng: np.random.Generator) -> None:
    k, dk = config.embed_dim, config.attn_dim
    for channel in range(config.channels):
        for step in (1, 2):
            params.add(attention_group(channel, step, "q"), xavier_uniform(rng, k, dk))
            params.add(attention_group(channel, step, "k"), xavier_uniform(rng, k, dk))
            params.add(attention_group(channel, step, "v"), xavier_uniform(rng, k, k))


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def position_weights(graph: ComputeGraph, scores: Tensor) -> Tensor:
    """Softmax of an n x 1 score column over positions, returned as 1 x n."""
    return graph.softmax_rows(graph.transpose(scores))


def _scores(
    graph: ComputeGraph, queries: Tensor, key_source: Tensor, w_key: Tensor, attn_dim: int
) -> Tensor:
    key = graph.matmul(key_source, w_key)
    raw = graph.matmul(queries, graph.transpose(key))
    return graph.scale(raw, inverse_sqrt(attn_dim))


def _single_key_rows(
    graph: ComputeGraph, scores: Tensor, key_source: Tensor, w_value: Tensor
) -> Tensor:
    # softmax over a single key: every weight is exactly 1
    weights = graph.softmax_rows(scores)
    return graph.matmul(weights, graph.matmul(key_source, w_value))


def _check_rows(x: Tensor, op: str) -> None:
    if x.rows == 0:
        raise ArgumentError(f"{op} needs at least one sequence position")


def domain_level_ca(
    graph: ComputeGraph,
    params: ParamStore,
    config: ModelConfig,
    x: Tensor,
    e_d: Tensor,
    channel: int,
) -> tuple[Tensor, np.ndarray]:
    """Coarse step: weight sequence rows by their affinity to the target domain."""
    _check_rows(x, "domain_level_ca")
    n = x.rows
    if not config.domain_attention:
        return x, uniform_weights(n)
    w_q = params[attention_group(channel, 1, "q")]
    w_k = params[attention_group(channel, 1, "k")]
    w_v = params[attention_group(channel, 1, "v")]
    scores = _scores(graph, graph.matmul(x, w_q), e_d, w_k, config.attn_dim)
    if config.attention_semantics == "literal":
        return _single_key_rows(graph, scores, e_d, w_v), uniform_weights(n)
    alpha = position_weights(graph, scores)
    e1 = graph.scale_rows(graph.matmul(x, w_v), alpha)
    return e1, alpha.data.ravel().copy()


def item_level_ca(
    graph: ComputeGraph,
    params: ParamStore,
    config: ModelConfig,
    e1: Tensor,
    e_v: Tensor,
    channel: int,
) -> tuple[Tensor, np.ndarray]:
    """Fine step: pool the rows into one k-vector weighted by target-item affinity."""
    _check_rows(e1, "item_level_ca")
    n = e1.rows
    w_v = params[attention_group(channel, 2, "v")]
    if not config.item_attention:
        return graph.mean(graph.matmul(e1, w_v)), uniform_weights(n)
    w_q = params[attention_group(channel, 2, "q")]
    w_k = params[attention_group(channel, 2, "k")]
    scores = _scores(graph, graph.matmul(e1, w_q), e_v, w_k, config.attn_dim)
    if config.attention_semantics == "literal":
        return graph.mean(_single_key_rows(graph, scores, e_v, w_v)), uniform_weights(n)
    beta = position_weights(graph, scores)
    e_z = graph.weighted_rowsum(graph.matmul(e1, w_v), beta)
    return e_z, beta.data.ravel().copy()


__all__ = [
    "attention_group",
    "domain_level_ca",
    "init_attention",
    "item_level_ca",
    "position_weights",
    "uniform_weights",
]
