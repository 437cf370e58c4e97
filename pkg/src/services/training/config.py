"""Optimization settings."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

LossName = Literal["bce", "mse"]
OptimizerName = Literal["sgd", "adam"]


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    loss: LossName = "bce"
    lr: float = Field(1e-3, gt=0.0)
    optimizer: OptimizerName = "adam"
    adam_beta1: float = Field(0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)
    batch_size: int = Field(256, gt=0)
    epochs: int = Field(10, ge=0)
    seed: int = 0
    freeze_groups: tuple[str, ...] = ()
    grad_diag: bool = False
    diag_samples: int = Field(64, gt=0)


__all__ = ["LossName", "OptimizerName", "TrainConfig"]
