"""Comparison models trained on the same engine as DACDR.

dnn_single sees target data only; dnn_multi and cmf_lite share user rows
across domains and train on both; emcdr_lite runs the three-stage
factorize, factorize, map recipe and scores cold users through its bridge.
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.data.dataset import Sample
from src.services.data.vocab import ModelVocabulary
from src.services.model.base import Recommender
from src.services.model.config import ModelConfig
from src.services.model.layers import MLP, linear
from src.services.model.params import ParamStore, uniform_embedding

logger = logging.getLogger(__name__)


def _row(graph: ComputeGraph, table: Tensor, index: int) -> Tensor:
    return graph.embedding_lookup(table, [index])


def _dot(graph: ComputeGraph, a: Tensor, b: Tensor) -> Tensor:
    return graph.sum(graph.hadamard(a, b))


class DnnSingle(Recommender):
    """MLP over [e_u, e_v] with target-domain embeddings only."""

    @staticmethod
    def head(config: ModelConfig) -> MLP:
        return MLP("head", (2 * config.embed_dim, *config.head_hidden, 1))

    @classmethod
    def initialize(
        cls,
        variant: str,
        config: ModelConfig,
        vocab: ModelVocabulary,
        *,
        seed: int = 0,
        output_bias: float = 0.0,
    ) -> "DnnSingle":
        rng = np.random.default_rng(seed)
        k = config.embed_dim
        params = ParamStore()
        params.add("user_tgt", uniform_embedding(rng, len(vocab.users), k))
        params.add("item_tgt", uniform_embedding(rng, len(vocab.items_tgt), k))
        head = cls.head(config)
        head.init(params, rng)
        head.output_bias(params).data[0, 0] = output_bias
        return cls(variant, config, vocab, params, seed=seed)

    def output(self, graph: ComputeGraph, sample: Sample) -> Tensor:
        e_u = _row(graph, self.params["user_tgt"], self.vocab.users.index(sample.user_id))
        e_v = _row(graph, self.params["item_tgt"], self.vocab.items_tgt.index(sample.item_id))
        return self.head(self.config)(graph, self.params, graph.concat_cols([e_u, e_v]))


class DnnMulti(Recommender):
    """MLP over [e_u, e_v, e_domain]; domain row 0 is the source domain."""

    @staticmethod
    def head(config: ModelConfig) -> MLP:
        return MLP("head", (3 * config.embed_dim, *config.head_hidden, 1))

    @classmethod
    def initialize(
        cls,
        variant: str,
        config: ModelConfig,
        vocab: ModelVocabulary,
        *,
        seed: int = 0,
        output_bias: float = 0.0,
    ) -> "DnnMulti":
        rng = np.random.default_rng(seed)
        k = config.embed_dim
        params = ParamStore()
        params.add("user", uniform_embedding(rng, len(vocab.users), k))
        params.add("item_src", uniform_embedding(rng, len(vocab.items_src), k))
        params.add("item_tgt", uniform_embedding(rng, len(vocab.items_tgt), k))
        params.add("domain", uniform_embedding(rng, 1 + len(vocab.domains), k))
        head = cls.head(config)
        head.init(params, rng)
        head.output_bias(params).data[0, 0] = output_bias
        return cls(variant, config, vocab, params, seed=seed)

    def output(self, graph: ComputeGraph, sample: Sample) -> Tensor:
        params, vocab = self.params, self.vocab
        e_u = _row(graph, params["user"], vocab.users.index(sample.user_id))
        if sample.domain_id == vocab.source_domain:
            e_v = _row(graph, params["item_src"], vocab.items_src.index(sample.item_id))
            e_d = _row(graph, params["domain"], 0)
        else:
            e_v = _row(graph, params["item_tgt"], vocab.items_tgt.index(sample.item_id))
            e_d = _row(graph, params["domain"], 1 + self.domain_row(sample.domain_id))
        return self.head(self.config)(graph, params, graph.concat_cols([e_u, e_v, e_d]))


class CmfLite(Recommender):
    """Collective factorization: shared users, per-domain items and biases."""

    @classmethod
    def initialize(
        cls,
        variant: str,
        config: ModelConfig,
        vocab: ModelVocabulary,
        *,
        seed: int = 0,
        output_bias: float = 0.0,
    ) -> "CmfLite":
        rng = np.random.default_rng(seed)
        k = config.embed_dim
        params = ParamStore()
        params.add("user", uniform_embedding(rng, len(vocab.users), k))
        params.add("item_src", uniform_embedding(rng, len(vocab.items_src), k))
        params.add("item_tgt", uniform_embedding(rng, len(vocab.items_tgt), k))
        params.add("item_src_bias", np.zeros((len(vocab.items_src), 1)))
        params.add("item_tgt_bias", np.zeros((len(vocab.items_tgt), 1)))
        params.add("bias", np.full((1 + len(vocab.domains), 1), output_bias))
        return cls(variant, config, vocab, params, seed=seed)

    def output(self, graph: ComputeGraph, sample: Sample) -> Tensor:
        params, vocab = self.params, self.vocab
        e_u = _row(graph, params["user"], vocab.users.index(sample.user_id))
        if sample.domain_id == vocab.source_domain:
            item = vocab.items_src.index(sample.item_id)
            table, item_bias, domain = "item_src", "item_src_bias", 0
        else:
            item = vocab.items_tgt.index(sample.item_id)
            table, item_bias, domain = "item_tgt", "item_tgt_bias", 1 + self.domain_row(sample.domain_id)
        score = _dot(graph, e_u, _row(graph, params[table], item))
        score = graph.add(score, _row(graph, params[item_bias], item))
        return graph.add(score, _row(graph, params["bias"], domain))


EMCDR_STAGES = {
    "source": ("user_src", "item_src", "item_src_bias", "bias_src"),
    "target": ("user_tgt", "item_tgt", "item_tgt_bias", "bias_tgt"),
    "bridge": ("bridge.w", "bridge.b"),
}


class EmcdrLite(Recommender):
    """Separate source and target factorizations joined by a learned map.

    Before the bridge stage completes, target scores use the target user
    rows; afterwards every target score goes through f(e_u^s).
    """

    def __init__(self, *args: Any, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self.mapped = False

    @classmethod
    def initialize(
        cls,
        variant: str,
        config: ModelConfig,
        vocab: ModelVocabulary,
        *,
        seed: int = 0,
        output_bias: float = 0.0,
    ) -> "EmcdrLite":
        rng = np.random.default_rng(seed)
        k = config.embed_dim
        params = ParamStore()
        params.add("user_src", uniform_embedding(rng, len(vocab.users), k))
        params.add("item_src", uniform_embedding(rng, len(vocab.items_src), k))
        params.add("item_src_bias", np.zeros((len(vocab.items_src), 1)))
        params.add("bias_src", np.full((1, 1), output_bias))
        params.add("user_tgt", uniform_embedding(rng, len(vocab.users), k))
        params.add("item_tgt", uniform_embedding(rng, len(vocab.items_tgt), k))
        params.add("item_tgt_bias", np.zeros((len(vocab.items_tgt), 1)))
        params.add("bias_tgt", np.full((len(vocab.domains), 1), output_bias))
        params.add("bridge.w", np.eye(k))
        params.add("bridge.b", np.zeros((1, k)))
        return cls(variant, config, vocab, params, seed=seed)

    def enter_stage(self, stage: str) -> None:
        self.params.set_trainable(EMCDR_STAGES[stage])
        logger.info("emcdr_lite: stage '%s'", stage)

    def finish(self) -> None:
        self.mapped = True
        self.params.set_trainable(self.params.names)

    def mapped_user(self, graph: ComputeGraph, user_id: str) -> Tensor:
        e_s = _row(graph, self.params["user_src"], self.vocab.users.index(user_id))
        return linear(graph, e_s, self.params["bridge.w"], self.params["bridge.b"])

    def output(self, graph: ComputeGraph, sample: Sample) -> Tensor:
        params, vocab = self.params, self.vocab
        if sample.domain_id == vocab.source_domain:
            item = vocab.items_src.index(sample.item_id)
            e_u = _row(graph, params["user_src"], vocab.users.index(sample.user_id))
            score = _dot(graph, e_u, _row(graph, params["item_src"], item))
            score = graph.add(score, _row(graph, params["item_src_bias"], item))
            return graph.add(score, params["bias_src"])
        item = vocab.items_tgt.index(sample.item_id)
        if self.mapped:
            e_u = self.mapped_user(graph, sample.user_id)
        else:
            e_u = _row(graph, params["user_tgt"], vocab.users.index(sample.user_id))
        score = _dot(graph, e_u, _row(graph, params["item_tgt"], item))
        score = graph.add(score, _row(graph, params["item_tgt_bias"], item))
        return graph.add(score, _row(graph, params["bias_tgt"], self.domain_row(sample.domain_id)))

    def bridge_loss(self, graph: ComputeGraph, user_id: str) -> Tensor:
        """Squared distance between f(e_u^s) and the fitted target row."""
        target = _row(graph, self.params["user_tgt"], self.vocab.users.index(user_id))
        diff = graph.sub(self.mapped_user(graph, user_id), target)
        return graph.sum(graph.hadamard(diff, diff))

    def state(self) -> dict[str, Any]:
        return {"mapped": self.mapped}

    def load_state(self, state: dict[str, Any]) -> None:
        self.mapped = bool(state.get("mapped", False))


__all__ = ["CmfLite", "DnnMulti", "DnnSingle", "EMCDR_STAGES", "EmcdrLite"]
