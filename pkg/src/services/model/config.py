"""Model hyper-parameters."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.lib.models import OutputMode

AttentionSemantics = Literal["gated", "literal"]
Ablation = Literal["full", "no_da", "no_ia", "no_da_ia"]
UserTransfer = Literal["encoder", "meta_bridge"]
BridgeKind = Literal["personalized", "fixed"]

CHANNEL_NAMES = ("behavior", "side")


class ModelConfig(BaseModel):
    """Shape and switches of the network.

    Channel 0 attends over source item embeddings, channel 1 over their
    category embeddings; `channels=1` keeps the behaviour channel only.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    embed_dim: int = Field(16, gt=0)
    attn_dim: int = Field(16, gt=0)
    max_seq_len: int = Field(50, gt=0)
    channels: int = Field(2, ge=1, le=len(CHANNEL_NAMES))
    encoder_hidden: tuple[int, ...] = (64, 32)
    head_hidden: tuple[int, ...] = (64, 32)
    output_mode: OutputMode = "logit"
    attention_semantics: AttentionSemantics = "gated"
    ablation: Ablation = "full"
    user_transfer: UserTransfer = "encoder"
    bridge_kind: BridgeKind = "personalized"
    causal: bool = True

    @field_validator("encoder_hidden", "head_hidden")
    @classmethod
    def _positive_widths(cls, widths: tuple[int, ...]) -> tuple[int, ...]:
        for width in widths:
            if width <= 0:
                raise ValueError(f"hidden layer widths must be positive, got {width}")
        return widths

    @property
    def domain_attention(self) -> bool:
        return self.ablation in ("full", "no_ia")

    @property
    def item_attention(self) -> bool:
        return self.ablation in ("full", "no_da")

    @property
    def loss(self) -> str:
        return "bce" if self.output_mode == "logit" else "mse"


__all__ = [
    "Ablation",
    "AttentionSemantics",
    "BridgeKind",
    "CHANNEL_NAMES",
    "ModelConfig",
    "UserTransfer",
]
