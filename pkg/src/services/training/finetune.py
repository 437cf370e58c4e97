"""New-domain fine-tuning with everything outside the freeze set held fixed."""

from __future__ import annotations

import logging
from typing import Sequence

from src.lib.errors import ConfigError
from src.lib.policy import match_groups
from src.services.data.dataset import Sample
from src.services.model.base import Recommender
from src.services.training.config import TrainConfig
from src.services.training.trainer import TrainReport, Trainer

logger = logging.getLogger(__name__)

FINETUNE_TRAINABLE = ("domain", "item_tgt", "attn.*")


def finetune(
    model: Recommender,
    samples: Sequence[Sample],
    config: TrainConfig,
    *,
    domain_id: str,
    new_items: Sequence[str] = (),
    trainable: Sequence[str] = FINETUNE_TRAINABLE,
) -> TrainReport:
    """Register `domain_id`, then train only the `trainable` groups on `samples`.

    Group patterns are shell-style; a pattern matching no group is a
    ConfigError, as is an entry of `config.freeze_groups` that matches nothing.
    """
    model.register_domain(domain_id, list(new_items))
    params = model.params
    keep = match_groups(params.names, trainable)
    if config.freeze_groups:
        frozen = set(match_groups(params.names, config.freeze_groups))
        keep = [name for name in keep if name not in frozen]
    if not keep:
        raise ConfigError("Fine-tuning would leave no trainable parameter group")
    params.set_trainable(keep)
    logger.info(
        "Fine-tuning %s on domain '%s': %d samples, trainable %s",
        model.variant,
        domain_id,
        len(samples),
        ", ".join(keep),
    )
    trainer = Trainer(config.model_copy(update={"freeze_groups": ()}))
    report = trainer.fit(model, samples)
    report.config = config.model_dump(mode="json")
    return report


__all__ = ["FINETUNE_TRAINABLE", "finetune"]
