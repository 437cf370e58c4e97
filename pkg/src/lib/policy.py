"""Cross-config validators shared by training, fine-tuning and the CLI."""

from __future__ import annotations

from fnmatch import fnmatchcase
from typing import Iterable, Sequence

from src.lib.errors import ConfigError

LOSS_FOR_OUTPUT = {"logit": "bce", "rating": "mse"}


def ensure_loss_pairing(output_mode: str, loss: str) -> None:
    """Raise ConfigError unless bce pairs with logit output and mse with rating."""
    expected = LOSS_FOR_OUTPUT.get(output_mode)
    if expected is None:
        raise ConfigError(f"Unknown output mode '{output_mode}'")
    if loss != expected:
        raise ConfigError(
            f"Loss '{loss}' cannot train a model in '{output_mode}' mode (expected '{expected}')"
        )


def match_groups(names: Iterable[str], patterns: Sequence[str]) -> list[str]:
    """Return the group names matched by any pattern, failing on dead patterns."""
    names = list(names)
    matched: list[str] = []
    for pattern in patterns:
        hits = [name for name in names if fnmatchcase(name, pattern)]
        if not hits:
            raise ConfigError(f"Parameter group '{pattern}' not found")
        for name in hits:
            if name not in matched:
                matched.append(name)
    return matched


__all__ = ["LOSS_FOR_OUTPUT", "ensure_loss_pairing", "match_groups"]
