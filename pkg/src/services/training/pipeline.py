"""Per-variant training recipes on a cold-start split."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from src.lib.policy import ensure_loss_pairing
from src.services.data.dataset import CrossDomainDataset, Sample
from src.services.data.split import ColdStartSplit, assert_no_leakage
from src.services.model.base import Recommender
from src.services.model.baselines import EmcdrLite
from src.services.model.config import ModelConfig
from src.services.model.factory import build_model
from src.services.training.config import TrainConfig
from src.services.training.trainer import TrainReport, Trainer

logger = logging.getLogger(__name__)

SOURCE_AND_TARGET = ("dnn_multi", "cmf_lite")


@dataclass(slots=True)
class FitResult:
    model: Recommender
    report: TrainReport
    train_samples: list[Sample]


def fit_variant(
    variant: str,
    dataset: CrossDomainDataset,
    split: ColdStartSplit,
    model_config: ModelConfig,
    train_config: TrainConfig,
) -> FitResult:
    """Build and train one variant; test users' target labels are never read."""
    ensure_loss_pairing(model_config.output_mode, train_config.loss)
    mode = model_config.output_mode
    max_len, causal = model_config.max_seq_len, model_config.causal
    target = dataset.target_samples(split, "train", mode, max_len=max_len, causal=causal)
    assert_no_leakage(split, (sample.user_id for sample in target))

    output_bias = 0.0
    if mode == "rating" and target:
        output_bias = sum(sample.label for sample in target) / len(target)
    model = build_model(
        variant, model_config, dataset.vocabulary(), seed=train_config.seed, output_bias=output_bias
    )
    trainer = Trainer(train_config)

    if isinstance(model, EmcdrLite):
        report = _fit_emcdr(model, dataset, split, target, train_config)
    else:
        examples = target
        if variant in SOURCE_AND_TARGET:
            examples = dataset.source_samples(mode, max_len=max_len, causal=causal) + target
        report = trainer.fit(model, examples, diag_samples=target)
    report.config = {
        "model": model_config.model_dump(mode="json"),
        "train": train_config.model_dump(mode="json"),
        "split": split.describe(),
    }
    logger.info(
        "Fitted %s on %d samples in %.2fs", variant, report.samples, report.wall_time_s
    )
    return FitResult(model=model, report=report, train_samples=target)


def _fit_emcdr(
    model: EmcdrLite,
    dataset: CrossDomainDataset,
    split: ColdStartSplit,
    target: list[Sample],
    config: TrainConfig,
) -> TrainReport:
    """Factorize the source, factorize the target, then fit the bridge."""
    mode = model.config.output_mode
    trainer = Trainer(config)
    report = TrainReport(variant=model.variant)

    model.enter_stage("source")
    source = dataset.source_samples(mode, max_len=1, causal=False)
    trainer.fit(model, source, stage="source", report=report)

    model.enter_stage("target")
    trainer.fit(model, target, stage="target", report=report)

    model.enter_stage("bridge")
    users = sorted(split.train_users)
    trainer.fit(model, users, model.bridge_loss, stage="bridge", report=report)

    model.finish()
    report.losses = list(report.stages["target"])
    report.samples = len(source) + len(target)
    return report


__all__ = ["FitResult", "SOURCE_AND_TARGET", "fit_variant"]
