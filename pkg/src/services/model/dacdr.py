"""The DACDR network: per-channel two-step attention, domain encoder, head."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.data.dataset import Sample
from src.services.data.vocab import ModelVocabulary, Vocabulary
from src.services.model.attention import domain_level_ca, init_attention, item_level_ca
from src.services.model.base import Recommender
from src.services.model.bridge import init_bridge, meta_bridge_predict
from src.services.model.config import ModelConfig
from src.services.model.diagnostics import gradient_norm_report
from src.services.model.encoder import (
    encode_user,
    encoder_mlp,
    head_input,
    head_mlp,
    head_output,
    output_value,
)
from src.services.model.params import ParamStore, uniform_embedding
from src.services.training.losses import loss_node

logger = logging.getLogger(__name__)

ABLATION_VARIANTS = {"dacdr": "full", "no_da": "no_da", "no_ia": "no_ia", "no_da_ia": "no_da_ia"}
CHANNEL_TABLES = ("item_src", "side")


@dataclass(slots=True)
class ChannelTrace:
    alpha: np.ndarray
    beta: np.ndarray
    e_z: np.ndarray


@dataclass(slots=True)
class ForwardTrace:
    """What one forward pass computed, for inspection and diagnostics."""

    channels: list[ChannelTrace]
    user_embedding: np.ndarray
    prediction: float
    output: Tensor
    head_input: Tensor
    grad_norms: dict[str, float] | None = field(default=None)


class DacdrModel(Recommender):
    """DACDR and its three attention ablations."""

    @classmethod
    def initialize(
        cls,
        variant: str,
        config: ModelConfig,
        vocab: ModelVocabulary,
        *,
        seed: int = 0,
        output_bias: float = 0.0,
    ) -> "DacdrModel":
        rng = np.random.default_rng(seed)
        k = config.embed_dim
        params = ParamStore()
        params.add("item_src", uniform_embedding(rng, len(vocab.items_src), k))
        if config.channels > 1:
            params.add("side", uniform_embedding(rng, len(vocab.categories), k))
        params.add("item_tgt", uniform_embedding(rng, len(vocab.items_tgt), k))
        params.add("domain", uniform_embedding(rng, len(vocab.domains), k))
        if config.user_transfer == "meta_bridge":
            params.add("user_src", uniform_embedding(rng, len(vocab.users), k))
        init_attention(params, config, rng)
        if config.user_transfer == "encoder":
            encoder_mlp(config).init(params, rng)
        else:
            init_bridge(params, config.bridge_kind, k, rng)
        head = head_mlp(config)
        head.init(params, rng)
        head.output_bias(params).data[0, 0] = output_bias
        model = cls(variant, config, vocab, params, seed=seed)
        logger.info(
            "Initialized %s: %d groups, %d parameters", variant, len(params), params.count()
        )
        return model

    def _channel_vocab(self, channel: int) -> Vocabulary:
        return self.vocab.items_src if channel == 0 else self.vocab.categories

    def channel_ids(self, sample: Sample) -> list[list[int]]:
        """Row ids per channel, sorted so the input order cannot matter."""
        sequences = (sample.context.behavior_seq, sample.context.side_seq)
        ids: list[list[int]] = []
        for channel in range(self.config.channels):
            vocab = self._channel_vocab(channel)
            ids.append(sorted(vocab.lookup_or_pad(token) for token in sequences[channel]))
        return ids

    def forward(self, graph: ComputeGraph, sample: Sample) -> ForwardTrace:
        config, params = self.config, self.params
        e_d = graph.embedding_lookup(params["domain"], [self.domain_row(sample.domain_id)])
        e_v = graph.embedding_lookup(params["item_tgt"], [self.vocab.items_tgt.index(sample.item_id)])

        pooled: list[Tensor] = []
        traces: list[ChannelTrace] = []
        for channel, ids in enumerate(self.channel_ids(sample)):
            x = graph.embedding_lookup(params[CHANNEL_TABLES[channel]], ids)
            e1, alpha = domain_level_ca(graph, params, config, x, e_d, channel)
            e_z, beta = item_level_ca(graph, params, config, e1, e_v, channel)
            pooled.append(e_z)
            traces.append(ChannelTrace(alpha=alpha, beta=beta, e_z=e_z.data.ravel().copy()))

        if config.user_transfer == "encoder":
            user = encode_user(graph, params, config, pooled, e_d)
        else:
            e_u = graph.embedding_lookup(params["user_src"], [self.vocab.users.index(sample.user_id)])
            user = meta_bridge_predict(graph, params, config, e_u, pooled[0])

        features = head_input(graph, user, pooled, e_v, e_d)
        raw = head_output(graph, params, config, features)
        prediction = output_value(config, raw.item())
        return ForwardTrace(
            channels=traces,
            user_embedding=user.data.ravel().copy(),
            prediction=prediction,
            output=raw,
            head_input=features,
        )

    def output(self, graph: ComputeGraph, sample: Sample) -> Tensor:
        return self.forward(graph, sample).output

    def register_domain(self, domain_id: str, new_items: list[str]) -> None:
        """Append a fresh domain row and fresh target-item rows."""
        k = self.config.embed_dim
        rng = np.random.default_rng([self.seed, len(self.vocab.domains)])
        if domain_id not in self.vocab.domains:
            self.vocab.domains.add(domain_id)
            self.params.append_rows("domain", uniform_embedding(rng, 1, k))
        fresh = [item for item in dict.fromkeys(new_items) if item not in self.vocab.items_tgt]
        for item in fresh:
            self.vocab.items_tgt.add(item)
        if fresh:
            self.params.append_rows("item_tgt", uniform_embedding(rng, len(fresh), k))
        logger.info("Registered domain '%s' with %d new target items", domain_id, len(fresh))


def forward_sample(model: DacdrModel, sample: Sample, *, diagnostics: bool = False) -> ForwardTrace:
    """One forward pass on a private graph, optionally with per-group grad norms.

    Diagnostics run a backward pass on the sample loss and restore whatever
    gradients the parameters held before.
    """
    graph = ComputeGraph()
    trace = model.forward(graph, sample)
    if diagnostics:
        saved = {name: tensor.grad for name, tensor in model.params.items()}
        model.params.zero_grad()
        try:
            graph.backward(loss_node(graph, model.config.loss, trace.output, sample.label))
            trace.grad_norms = gradient_norm_report(model.params)
        finally:
            for name, tensor in model.params.items():
                tensor.grad = saved[name]
    return trace


__all__ = [
    "ABLATION_VARIANTS",
    "ChannelTrace",
    "DacdrModel",
    "ForwardTrace",
    "forward_sample",
]
