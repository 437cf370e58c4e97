"""Epoch loop: seeded shuffling, per-sample graphs, batched optimizer steps."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Callable, Sequence, TypeVar

import numpy as np
from pydantic import BaseModel, Field

from src.lib.errors import DataError, NonFiniteError, TrainingDivergedError
from src.lib.policy import ensure_loss_pairing, match_groups
from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.data.dataset import Sample
from src.services.model.base import Recommender
from src.services.model.dacdr import DacdrModel
from src.services.model.diagnostics import gradient_norm_report, user_embedding_share
from src.services.training.config import TrainConfig
from src.services.training.losses import loss_node
from src.services.training.optim import build_optimizer

logger = logging.getLogger(__name__)

T = TypeVar("T")
LossFn = Callable[[ComputeGraph, Any], Tensor]


class TrainReport(BaseModel):
    """Structured (JSON-compatible) record of one training run."""

    variant: str
    epochs: int = 0
    samples: int = 0
    losses: list[float] = Field(default_factory=list)
    wall_time_s: float = 0.0
    checkpoint: str | None = None
    config: dict[str, Any] = Field(default_factory=dict)
    stages: dict[str, list[float]] = Field(default_factory=dict)
    grad_norms: list[dict[str, float]] = Field(default_factory=list)
    user_embedding_share: list[float] = Field(default_factory=list)
    diverged: bool = False


@dataclass(slots=True)
class GradientDiagnostics:
    norms: dict[str, float]
    user_share: float | None


def gradient_diagnostics(model: Recommender, samples: Sequence[Sample]) -> GradientDiagnostics:
    """Batch-mean gradient norms per group without touching the parameters.

    For DACDR models the share of head-input gradient reaching the user
    embedding slot is averaged over the batch as well.
    """
    params = model.params
    saved = {name: tensor.grad for name, tensor in params.items()}
    params.zero_grad()
    shares: list[float] = []
    try:
        scale = 1.0 / max(len(samples), 1)
        for sample in samples:
            graph = ComputeGraph()
            if isinstance(model, DacdrModel):
                trace = model.forward(graph, sample)
                loss = loss_node(graph, model.config.loss, trace.output, sample.label)
                graph.backward(graph.scale(loss, scale))
                shares.append(user_embedding_share(graph, trace.head_input, model.config.embed_dim))
            else:
                graph.backward(graph.scale(model.sample_loss(graph, sample), scale))
        norms = gradient_norm_report(params)
    finally:
        for name, tensor in params.items():
            tensor.grad = saved[name]
    return GradientDiagnostics(norms=norms, user_share=float(np.mean(shares)) if shares else None)


class Trainer:
    """Minibatch training of one model on a fixed list of examples.

    Each example gets its own graph; its loss is scaled by 1/B and
    backpropagated, so a batch's gradients sum to the gradient of the batch
    mean loss. One optimizer step follows each batch.
    """

    def __init__(self, config: TrainConfig) -> None:
        self.config = config

    def fit(
        self,
        model: Recommender,
        examples: Sequence[T],
        loss_fn: LossFn | None = None,
        *,
        stage: str | None = None,
        diag_samples: Sequence[Sample] | None = None,
        report: TrainReport | None = None,
    ) -> TrainReport:
        config = self.config
        if loss_fn is None:
            ensure_loss_pairing(model.config.output_mode, config.loss)
            loss_fn = model.sample_loss
        params = model.params
        if config.freeze_groups:
            params.freeze(match_groups(params.names, config.freeze_groups))
        if config.epochs > 0 and not examples:
            raise DataError(f"No training examples for {model.variant}")

        report = report or TrainReport(variant=model.variant, config=config.model_dump(mode="json"))
        report.epochs = config.epochs
        report.samples = len(examples)
        curve = report.stages.setdefault(stage, []) if stage else report.losses
        rng = np.random.default_rng(config.seed)
        optimizer = build_optimizer(config)
        started = time.perf_counter()
        n = len(examples)
        for epoch in range(config.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, config.batch_size):
                batch = order[start : start + config.batch_size]
                params.zero_grad()
                scale = 1.0 / len(batch)
                for index in batch:
                    graph = ComputeGraph()
                    try:
                        loss = loss_fn(graph, examples[index])
                        value = loss.item()
                        graph.backward(graph.scale(loss, scale))
                    except NonFiniteError as exc:
                        report.diverged = True
                        report.wall_time_s = time.perf_counter() - started
                        raise TrainingDivergedError(
                            f"{model.variant}: training diverged in epoch {epoch + 1}: {exc}", report
                        ) from exc
                    total += value
                optimizer.step(params)
                self._check_params(model, report, epoch, started)
            mean_loss = total / n
            if not math.isfinite(mean_loss):
                report.diverged = True
                raise TrainingDivergedError(f"{model.variant}: loss is {mean_loss}", report)
            curve.append(mean_loss)
            logger.info(
                "%s%s epoch %d/%d loss %.6f",
                model.variant,
                f" [{stage}]" if stage else "",
                epoch + 1,
                config.epochs,
                mean_loss,
            )
            if config.grad_diag:
                probe = list(diag_samples if diag_samples is not None else examples)[: config.diag_samples]
                if probe and isinstance(probe[0], Sample):
                    diagnostics = gradient_diagnostics(model, probe)
                    report.grad_norms.append(diagnostics.norms)
                    if diagnostics.user_share is not None:
                        report.user_embedding_share.append(diagnostics.user_share)
        params.zero_grad()
        report.wall_time_s += time.perf_counter() - started
        return report

    @staticmethod
    def _check_params(model: Recommender, report: TrainReport, epoch: int, started: float) -> None:
        for name, tensor in model.params.items():
            if tensor.requires_grad and not np.isfinite(tensor.data).all():
                report.diverged = True
                report.wall_time_s = time.perf_counter() - started
                raise TrainingDivergedError(
                    f"{model.variant}: parameter group '{name}' became non-finite in epoch {epoch + 1}",
                    report,
                )


__all__ = ["GradientDiagnostics", "TrainReport", "Trainer", "gradient_diagnostics"]
