"""Shared interface of every trainable recommender variant."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any

from src.lib.errors import ConfigError
from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.data.dataset import Sample
from src.services.data.vocab import ModelVocabulary
from src.services.model.config import ModelConfig
from src.services.model.encoder import output_value
from src.services.model.params import ParamStore
from src.services.training.losses import loss_node


class Recommender(ABC):
    """A variant owns its parameters and maps a Sample to one raw output.

    Parameters are mutated only by the training thread; `predict` builds a
    private graph per call, so concurrent scoring is safe.
    """

    def __init__(
        self,
        variant: str,
        config: ModelConfig,
        vocab: ModelVocabulary,
        params: ParamStore,
        *,
        seed: int = 0,
    ) -> None:
        self.variant = variant
        self.config = config
        self.vocab = vocab
        self.params = params
        self.seed = seed

    @classmethod
    @abstractmethod
    def initialize(
        cls,
        variant: str,
        config: ModelConfig,
        vocab: ModelVocabulary,
        *,
        seed: int = 0,
        output_bias: float = 0.0,
    ) -> "Recommender":
        """Fresh parameters; `output_bias` seeds the output offset (mean rating)."""

    @abstractmethod
    def output(self, graph: ComputeGraph, sample: Sample) -> Tensor:
        """Raw 1x1 output: logit in logit mode, rating in rating mode."""

    def sample_loss(self, graph: ComputeGraph, sample: Sample) -> Tensor:
        return loss_node(graph, self.config.loss, self.output(graph, sample), sample.label)

    def predict(self, sample: Sample) -> float:
        graph = ComputeGraph()
        return output_value(self.config, self.output(graph, sample).item())

    def domain_row(self, domain_id: str) -> int:
        return self.vocab.domains.index(domain_id)

    def register_domain(self, domain_id: str, new_items: list[str]) -> None:
        raise ConfigError(f"Variant '{self.variant}' does not support new-domain fine-tuning")

    def state(self) -> dict[str, Any]:
        """Variant-specific state persisted alongside the parameters."""
        return {}

    def load_state(self, state: dict[str, Any]) -> None:
        return None

    def describe(self) -> dict[str, Any]:
        return {
            "variant": self.variant,
            "groups": len(self.params),
            "parameters": self.params.count(),
            "trainable": self.params.trainable_names(),
        }


__all__ = ["Recommender"]
