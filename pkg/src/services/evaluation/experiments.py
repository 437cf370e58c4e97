"""Sweep runners: variant tables, the ablation table, beta sweeps and the learning check."""

from __future__ import annotations

import logging
from typing import Any, Sequence

from pydantic import BaseModel, ConfigDict

from src.services.data.dataset import CrossDomainDataset
from src.services.data.split import ColdStartSplit, cold_start_split
from src.services.data.synth import SynthSpec, synth_generate
from src.services.evaluation.evaluator import EvalReport, evaluate
from src.services.model.config import ModelConfig
from src.services.model.dacdr import ABLATION_VARIANTS
from src.services.training.config import TrainConfig
from src.services.training.pipeline import fit_variant

logger = logging.getLogger(__name__)


def run_variant_sweep(
    variants: Sequence[str],
    dataset: CrossDomainDataset,
    split: ColdStartSplit,
    model_config: ModelConfig,
    train_config: TrainConfig,
    *,
    workers: int | None = None,
    label: str = "sweep",
) -> EvalReport:
    """Train and evaluate each variant on one split; one table row per variant."""
    rows: list[dict[str, Any]] = []
    for variant in variants:
        fitted = fit_variant(variant, dataset, split, model_config, train_config)
        report = evaluate(fitted.model, dataset, split, workers=workers)
        row: dict[str, Any] = {"variant": variant}
        if variant in ABLATION_VARIANTS:
            row["ablation"] = ABLATION_VARIANTS[variant]
        row.update(report.metrics)
        row["samples"] = report.samples
        row["final_train_loss"] = fitted.report.losses[-1] if fitted.report.losses else None
        rows.append(row)
    return EvalReport(
        dataset=dataset.name,
        split=split.describe(),
        variant=label,
        mode=model_config.output_mode,
        samples=rows[0]["samples"] if rows else 0,
        rows=rows,
        config={
            "model": model_config.model_dump(mode="json"),
            "train": train_config.model_dump(mode="json"),
        },
    )


def run_ablation_sweep(
    dataset: CrossDomainDataset,
    split: ColdStartSplit,
    model_config: ModelConfig,
    train_config: TrainConfig,
    *,
    workers: int | None = None,
) -> EvalReport:
    """The four rows full / no_da / no_ia / no_da_ia."""
    return run_variant_sweep(
        tuple(ABLATION_VARIANTS),
        dataset,
        split,
        model_config,
        train_config,
        workers=workers,
        label="ablation",
    )


def run_beta_sweep(
    betas: Sequence[float],
    variant: str,
    dataset: CrossDomainDataset,
    split_seed: int,
    model_config: ModelConfig,
    train_config: TrainConfig,
    *,
    workers: int | None = None,
) -> list[EvalReport]:
    """One report per beta; each split gets its own freshly trained model."""
    reports: list[EvalReport] = []
    for beta in betas:
        split = cold_start_split(
            dataset.records,
            beta,
            split_seed,
            source_domain=dataset.source_domain,
            target_domains=dataset.target_domains,
        )
        fitted = fit_variant(variant, dataset, split, model_config, train_config)
        report = evaluate(fitted.model, dataset, split, workers=workers)
        report.config = fitted.report.config
        reports.append(report)
    return reports


class LearningCheck(BaseModel):
    """Train/test AUC of one DACDR fit on clean synthetic data."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_users: int
    epochs: int
    train_auc: float
    test_auc: float
    train_samples: int
    test_samples: int

    def passed(self, train_min: float = 0.95, test_min: float = 0.90) -> bool:
        return self.train_auc >= train_min and self.test_auc >= test_min


def learning_spec(n_users: int, seed: int = 0) -> SynthSpec:
    """Low-noise, unshifted logit data in a two-dimensional taste space.

    Item counts follow the user count so small runs still see every target
    item often enough to learn it.
    """
    return SynthSpec(
        n_users=n_users,
        n_items_src=min(200, max(40, n_users // 25)),
        n_items_tgt=min(100, max(20, n_users // 50)),
        overlap_frac=0.7,
        latent_dim=2,
        domain_shift_angle=0.0,
        noise=0.05,
        seed=seed,
        src_events_per_user=12,
        tgt_events_per_user=4,
    )


def run_learning_check(
    n_users: int = 5000,
    *,
    epochs: int = 10,
    seed: int = 0,
    beta: float = 0.2,
    lr: float = 3e-3,
    batch_size: int = 32,
    workers: int | None = None,
) -> LearningCheck:
    """Fit `dacdr` on `learning_spec` data and score both sides of the split."""
    generated = synth_generate(learning_spec(n_users, seed))
    dataset = CrossDomainDataset(generated.records, generated.side_info, name=f"learning-{seed}")
    split = cold_start_split(dataset.records, beta, seed)
    model_config = ModelConfig(embed_dim=16, attn_dim=8, encoder_hidden=(32, 16), head_hidden=(32, 16))
    train_config = TrainConfig(lr=lr, batch_size=batch_size, epochs=epochs, seed=seed)
    fitted = fit_variant("dacdr", dataset, split, model_config, train_config)
    train = evaluate(fitted.model, dataset, split, workers=workers, samples=fitted.train_samples)
    test = evaluate(fitted.model, dataset, split, workers=workers)
    check = LearningCheck(
        n_users=n_users,
        epochs=epochs,
        train_auc=train.metrics["auc"],
        test_auc=test.metrics["auc"],
        train_samples=train.samples,
        test_samples=test.samples,
    )
    logger.info(
        "Learning check at %d users: train AUC %.4f, test AUC %.4f",
        n_users,
        check.train_auc,
        check.test_auc,
    )
    return check


__all__ = [
    "LearningCheck",
    "learning_spec",
    "run_ablation_sweep",
    "run_beta_sweep",
    "run_learning_check",
    "run_variant_sweep",
]
