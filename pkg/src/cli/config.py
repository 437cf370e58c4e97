"""RunConfig: flat `key = value` config files merged with flag overrides."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.lib.errors import ConfigError
from src.lib.models import OutputMode, Schema
from src.lib.policy import LOSS_FOR_OUTPUT, ensure_loss_pairing
from src.services.data.synth import SynthSpec
from src.services.model.config import (
    AttentionSemantics,
    BridgeKind,
    ModelConfig,
    UserTransfer,
)
from src.services.training.config import LossName, OptimizerName, TrainConfig

logger = logging.getLogger(__name__)

INTERACTIONS_FILE = "interactions.tsv"
SIDE_INFO_FILE = "side_info.tsv"
LIST_KEYS = ("target_domains", "encoder_hidden", "head_hidden", "freeze_groups")


class RunConfig(BaseModel):
    """Every key a config file may set; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    # data
    data_dir: str | None = None
    interactions: str | None = None
    side_info: str | None = None
    data_schema: Schema = Field("logit", alias="schema")
    source_domain: str = "source"
    target_domains: tuple[str, ...] = ("target",)
    max_malformed_frac: float = Field(0.01, ge=0.0, le=1.0)

    # split
    beta: float = Field(0.2, gt=0.0, lt=1.0)
    split_seed: int | None = None

    # model
    variant: str = "dacdr"
    embed_dim: int = 16
    attn_dim: int = 16
    max_seq_len: int = 50
    channels: int = 2
    encoder_hidden: tuple[int, ...] = (64, 32)
    head_hidden: tuple[int, ...] = (64, 32)
    output_mode: OutputMode | None = None
    attention_semantics: AttentionSemantics = "gated"
    user_transfer: UserTransfer = "encoder"
    bridge_kind: BridgeKind = "personalized"
    causal: bool = True

    # training
    loss: LossName | None = None
    lr: float = 1e-3
    optimizer: OptimizerName = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 256
    epochs: int = 10
    seed: int = 0
    freeze_groups: tuple[str, ...] = ()
    grad_diag: bool = False

    # synthetic data
    synth_users: int = 1000
    synth_items_src: int = 200
    synth_items_tgt: int = 100
    synth_overlap: float = 0.7
    synth_latent_dim: int = 8
    synth_shift_angle: float = 0.0
    synth_noise: float = 0.1
    synth_src_events: int = 20
    synth_tgt_events: int = 10
    synth_signal_scale: float | None = None

    # outputs
    out_dir: str = "runs"
    checkpoint: str | None = None
    report: str | None = None
    workers: int | None = None

    @field_validator(*LIST_KEYS, mode="before")
    @classmethod
    def _split_lists(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    # -- derived configs ------------------------------------------------

    @property
    def effective_output_mode(self) -> OutputMode:
        return self.output_mode or ("rating" if self.data_schema == "rating" else "logit")

    @property
    def effective_loss(self) -> str:
        return self.loss or LOSS_FOR_OUTPUT[self.effective_output_mode]

    @property
    def effective_split_seed(self) -> int:
        return self.seed if self.split_seed is None else self.split_seed

    def interactions_path(self) -> Path | None:
        if self.interactions:
            return Path(self.interactions)
        if self.data_dir:
            return Path(self.data_dir) / INTERACTIONS_FILE
        return None

    def side_info_path(self) -> Path | None:
        if self.side_info:
            return Path(self.side_info)
        if self.data_dir and (Path(self.data_dir) / SIDE_INFO_FILE).exists():
            return Path(self.data_dir) / SIDE_INFO_FILE
        return None

    def build_model_config(self) -> ModelConfig:
        return _validated(
            ModelConfig,
            embed_dim=self.embed_dim,
            attn_dim=self.attn_dim,
            max_seq_len=self.max_seq_len,
            channels=self.channels,
            encoder_hidden=self.encoder_hidden,
            head_hidden=self.head_hidden,
            output_mode=self.effective_output_mode,
            attention_semantics=self.attention_semantics,
            user_transfer=self.user_transfer,
            bridge_kind=self.bridge_kind,
            causal=self.causal,
        )

    def build_train_config(self) -> TrainConfig:
        ensure_loss_pairing(self.effective_output_mode, self.effective_loss)
        return _validated(
            TrainConfig,
            loss=self.effective_loss,
            lr=self.lr,
            optimizer=self.optimizer,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            freeze_groups=self.freeze_groups,
            grad_diag=self.grad_diag,
        )

    def build_synth_spec(self) -> SynthSpec:
        return _validated(
            SynthSpec,
            n_users=self.synth_users,
            n_items_src=self.synth_items_src,
            n_items_tgt=self.synth_items_tgt,
            overlap_frac=self.synth_overlap,
            latent_dim=self.synth_latent_dim,
            domain_shift_angle=self.synth_shift_angle,
            noise=self.synth_noise,
            seed=self.seed,
            schema=self.data_schema,
            src_events_per_user=self.synth_src_events,
            tgt_events_per_user=self.synth_tgt_events,
            signal_scale=self.synth_signal_scale,
            source_domain=self.source_domain,
            target_domain=self.target_domains[0] if self.target_domains else "target",
        )

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _validated(model: type[BaseModel], **values: Any) -> Any:
    try:
        return model(**values)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        key = ".".join(str(loc) for loc in error.get("loc", ())) or "config"
        parts.append(f"'{key}': {error.get('msg')}")
    return "Invalid configuration: " + "; ".join(parts)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read `key = value` lines; `#` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    values: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got '{raw.strip()}'")
        values[key.strip()] = value.strip()
    return values


def load_run_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """File values first, then every non-None override on top."""
    values: dict[str, Any] = parse_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    config = _validated(RunConfig, **values)
    logger.debug("Effective config: %s", config.echo())
    return config


__all__ = ["RunConfig", "load_run_config", "parse_config_file"]
