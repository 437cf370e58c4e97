"""Scoring of cold-start test samples and the EvalReport model."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.lib.errors import ConfigError
from src.lib.models import RATING_MAX, RATING_MIN, OutputMode
from src.lib.settings import eval_workers
from src.services.data.dataset import CrossDomainDataset, Sample
from src.services.data.split import ColdStartSplit
from src.services.evaluation.metrics import auc, mae_rmse
from src.services.model.base import Recommender

logger = logging.getLogger(__name__)

MAE_RMSE_SLACK = 1e-12


class EvalReport(BaseModel):
    """Metrics of one variant on one split, or a per-variant table in `rows`."""

    dataset: str
    split: dict[str, Any] = Field(default_factory=dict)
    variant: str
    mode: OutputMode = "logit"
    metrics: dict[str, float] = Field(default_factory=dict)
    samples: int = 0
    rows: list[dict[str, Any]] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _metric_ranges(self) -> "EvalReport":
        value = self.metrics.get("auc")
        if value is not None and not 0.0 <= value <= 1.0:
            raise ValueError(f"auc must lie in [0, 1], got {value}")
        mae, rmse = self.metrics.get("mae"), self.metrics.get("rmse")
        for name, metric in (("mae", mae), ("rmse", rmse)):
            if metric is not None and metric < 0.0:
                raise ValueError(f"{name} must be non-negative, got {metric}")
        if mae is not None and rmse is not None and rmse < mae - MAE_RMSE_SLACK:
            raise ValueError(f"rmse {rmse} below mae {mae}")
        return self


def score_samples(model: Recommender, samples: Sequence[Sample], workers: int | None = None) -> list[float]:
    """Predictions in sample order; fans out over threads when workers > 1."""
    workers = workers or eval_workers()
    if workers <= 1 or len(samples) < 2:
        return [model.predict(sample) for sample in samples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(model.predict, samples))


def compute_metrics(mode: OutputMode, preds: Sequence[float], labels: Sequence[float]) -> dict[str, float]:
    if mode == "logit":
        return {"auc": auc(preds, labels)}
    clamped = np.clip(np.asarray(preds, dtype=np.float64), RATING_MIN, RATING_MAX)
    mae, rmse = mae_rmse(clamped, labels)
    return {"mae": mae, "rmse": rmse}


def evaluate(
    model: Recommender,
    dataset: CrossDomainDataset,
    split: ColdStartSplit,
    mode: OutputMode | None = None,
    *,
    workers: int | None = None,
    samples: Sequence[Sample] | None = None,
) -> EvalReport:
    """Score every held-out target interaction with its causal context."""
    mode = mode or model.config.output_mode
    if mode != model.config.output_mode:
        raise ConfigError(
            f"Cannot evaluate a '{model.config.output_mode}' model in '{mode}' mode"
        )
    if samples is None:
        samples = dataset.target_samples(
            split,
            "test",
            mode,
            max_len=model.config.max_seq_len,
            causal=model.config.causal,
        )
    preds = score_samples(model, samples, workers)
    metrics = compute_metrics(mode, preds, [sample.label for sample in samples])
    logger.info(
        "Evaluated %s on %d test samples: %s",
        model.variant,
        len(samples),
        ", ".join(f"{key}={value:.4f}" for key, value in metrics.items()),
    )
    return EvalReport(
        dataset=dataset.name,
        split=split.describe(),
        variant=model.variant,
        mode=mode,
        metrics=metrics,
        samples=len(samples),
    )


__all__ = ["EvalReport", "compute_metrics", "evaluate", "score_samples"]
