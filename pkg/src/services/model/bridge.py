"""Meta-bridge mapping of a source user embedding into the target space.

Kept as the baseline the domain encoder replaces. The personalized bridge
generates its k x k map from the attention output of the behaviour channel;
the fixed bridge learns one shared affine map.
"""

from __future__ import annotations

import numpy as np

from src.lib.errors import ArgumentError
from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.model.config import BridgeKind, ModelConfig
from src.services.model.layers import linear
from src.services.model.params import ParamStore, xavier_uniform

GEN_WEIGHT = "bridge.gen.w"
GEN_BIAS = "bridge.gen.b"
FIXED_WEIGHT = "bridge.w"
FIXED_BIAS = "bridge.b"


def init_bridge(params: ParamStore, kind: BridgeKind, k: int, rng: np.random.Generator) -> None:
    """Both kinds start as the identity map."""
    if kind == "personalized":
        params.add(GEN_WEIGHT, xavier_uniform(rng, k, k * k) * 0.1)
        params.add(GEN_BIAS, np.eye(k).reshape(1, k * k))
    else:
        params.add(FIXED_WEIGHT, np.eye(k))
        params.add(FIXED_BIAS, np.zeros((1, k)))


def bridge_groups(kind: BridgeKind) -> tuple[str, str]:
    return (GEN_WEIGHT, GEN_BIAS) if kind == "personalized" else (FIXED_WEIGHT, FIXED_BIAS)


def meta_bridge_predict(
    graph: ComputeGraph,
    params: ParamStore,
    config: ModelConfig,
    e_u_src: Tensor,
    e_seq: Tensor | None = None,
) -> Tensor:
    """ê_u = e_u_src · M, with M generated from `e_seq` or learned directly."""
    k = config.embed_dim
    if config.bridge_kind == "personalized":
        if e_seq is None:
            raise ArgumentError("personalized bridge needs the behaviour attention output")
        generated = linear(graph, e_seq, params[GEN_WEIGHT], params[GEN_BIAS])
        return graph.matmul(e_u_src, graph.reshape(generated, k, k))
    return linear(graph, e_u_src, params[FIXED_WEIGHT], params[FIXED_BIAS])


__all__ = ["bridge_groups", "init_bridge", "meta_bridge_predict"]
