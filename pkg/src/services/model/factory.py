"""Factory helpers to assemble a recommender variant.

- `build_model` initializes any of the eight variants from a config.
- `save_model` / `load_model` round-trip a model through a checkpoint file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from src.lib.errors import ConfigError
from src.services.data.vocab import ModelVocabulary
from src.services.model.base import Recommender
from src.services.model.baselines import CmfLite, DnnMulti, DnnSingle, EmcdrLite
from src.services.model.checkpoint import CheckpointPayload, read_checkpoint, write_checkpoint
from src.services.model.config import ModelConfig
from src.services.model.dacdr import ABLATION_VARIANTS, DacdrModel

BASELINES: dict[str, type[Recommender]] = {
    "dnn_single": DnnSingle,
    "dnn_multi": DnnMulti,
    "cmf_lite": CmfLite,
    "emcdr_lite": EmcdrLite,
}
VARIANTS = (*ABLATION_VARIANTS, *BASELINES)


def model_class(variant: str) -> type[Recommender]:
    if variant in ABLATION_VARIANTS:
        return DacdrModel
    try:
        return BASELINES[variant]
    except KeyError:
        raise ConfigError(
            f"Unknown variant '{variant}' (expected one of {', '.join(VARIANTS)})"
        ) from None


def variant_config(variant: str, config: ModelConfig) -> ModelConfig:
    """DACDR ablation variants pin the ablation switch."""
    if variant in ABLATION_VARIANTS:
        return config.model_copy(update={"ablation": ABLATION_VARIANTS[variant]})
    return config


def build_model(
    variant: str,
    config: ModelConfig,
    vocab: ModelVocabulary,
    *,
    seed: int = 0,
    output_bias: float = 0.0,
) -> Recommender:
    cls = model_class(variant)
    return cls.initialize(
        variant, variant_config(variant, config), vocab, seed=seed, output_bias=output_bias
    )


def restore_model(payload: CheckpointPayload) -> Recommender:
    meta = payload.meta
    try:
        variant = meta["variant"]
        config = ModelConfig.model_validate(meta["model_config"])
        vocab = ModelVocabulary.from_dict(meta["vocab"])
    except KeyError as exc:
        raise ConfigError(f"Checkpoint meta lacks '{exc.args[0]}'") from None
    model = model_class(variant)(variant, config, vocab, payload.params, seed=int(meta.get("seed", 0)))
    model.load_state(meta.get("state", {}))
    return model


def checkpoint_meta(model: Recommender, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "variant": model.variant,
        "seed": model.seed,
        "model_config": model.config.model_dump(mode="json"),
        "vocab": model.vocab.to_dict(),
        "state": model.state(),
    }
    if extra:
        meta.update(extra)
    return meta


def save_model(model: Recommender, path: str | Path, extra: dict[str, Any] | None = None) -> Path:
    return write_checkpoint(path, checkpoint_meta(model, extra), model.params)


def load_model(path: str | Path) -> tuple[Recommender, dict[str, Any]]:
    """Return the restored model and the checkpoint's meta record."""
    payload = read_checkpoint(path)
    return restore_model(payload), payload.meta


__all__ = [
    "BASELINES",
    "VARIANTS",
    "build_model",
    "checkpoint_meta",
    "load_model",
    "model_class",
    "restore_model",
    "save_model",
    "variant_config",
]
