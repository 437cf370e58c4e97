"""Pydantic models representing core domain entities."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

Schema = Literal["logit", "rating"]
OutputMode = Literal["logit", "rating"]

RATING_MIN = 1.0
RATING_MAX = 5.0
POSITIVE_RATING = 4.0


class InteractionRecord(BaseModel):
    """One (user, item, domain, signal, timestamp) event."""

    model_config = ConfigDict(frozen=True)

    user_id: str = Field(..., min_length=1)
    item_id: str = Field(..., min_length=1)
    domain_id: str = Field(..., min_length=1)
    signal: float
    timestamp: int = Field(..., ge=0)

    def signal_valid(self, schema: Schema) -> bool:
        if schema == "logit":
            return self.signal in (0.0, 1.0)
        return RATING_MIN <= self.signal <= RATING_MAX


class SideInfoRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    item_id: str = Field(..., min_length=1)
    category_id: str = Field(..., min_length=1)


def label_for(signal: float, schema: Schema, output_mode: OutputMode) -> float:
    """Map a raw signal to the training target of a model output mode.

    Ratings are binarized at 4 when a logit model consumes a rating dataset.
    """
    if output_mode == "rating":
        return float(signal)
    if schema == "rating":
        return 1.0 if signal >= POSITIVE_RATING else 0.0
    return float(signal)


__all__ = [
    "InteractionRecord",
    "OutputMode",
    "POSITIVE_RATING",
    "RATING_MAX",
    "RATING_MIN",
    "Schema",
    "SideInfoRecord",
    "label_for",
]
