"""Cold-start split protocol over overlapping users."""

from __future__ import annotations

import logging
import math
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.lib.errors import ProtocolError
from src.lib.models import InteractionRecord

logger = logging.getLogger(__name__)

STANDARD_BETAS = (0.2, 0.5, 0.8)


class ColdStartSplit(BaseModel):
    """Deterministic partition of overlapping users into train and test."""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(..., gt=0.0, lt=1.0)
    seed: int
    test_users: frozenset[str]
    train_users: frozenset[str]

    @model_validator(mode="after")
    def _disjoint(self) -> "ColdStartSplit":
        if self.test_users & self.train_users:
            raise ValueError("test_users and train_users must be disjoint")
        return self

    @property
    def overlapping_users(self) -> frozenset[str]:
        return self.test_users | self.train_users

    def is_test_user(self, user_id: str) -> bool:
        return user_id in self.test_users

    def partition(
        self, records: Iterable[InteractionRecord], target_domains: Sequence[str]
    ) -> tuple[list[InteractionRecord], list[InteractionRecord]]:
        """Split target-domain interactions: every test-user event is held out."""
        targets = set(target_domains)
        train: list[InteractionRecord] = []
        test: list[InteractionRecord] = []
        for record in records:
            if record.domain_id not in targets:
                continue
            (test if record.user_id in self.test_users else train).append(record)
        return train, test

    def describe(self) -> dict[str, object]:
        return {
            "beta": self.beta,
            "seed": self.seed,
            "test_users": len(self.test_users),
            "train_users": len(self.train_users),
        }


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def overlapping_users(
    records: Iterable[InteractionRecord], source_domain: str, target_domains: Sequence[str]
) -> list[str]:
    """Users with at least one source and one target interaction, sorted by id."""
    targets = set(target_domains)
    in_source: set[str] = set()
    in_target: set[str] = set()
    for record in records:
        if record.domain_id == source_domain:
            in_source.add(record.user_id)
        elif record.domain_id in targets:
            in_target.add(record.user_id)
    return sorted(in_source & in_target)


def cold_start_split(
    records: Iterable[InteractionRecord],
    beta: float,
    seed: int,
    *,
    source_domain: str = "source",
    target_domains: Sequence[str] = ("target",),
) -> ColdStartSplit:
    """Hold out round(beta * N) overlapping users as cold-start test users."""
    if not 0.0 < beta < 1.0:
        raise ProtocolError(f"beta must lie in (0, 1), got {beta}")
    users = overlapping_users(records, source_domain, target_domains)
    if not users:
        raise ProtocolError("No overlapping users between source and target domains")
    order = np.random.default_rng(seed).permutation(len(users))
    shuffled = [users[i] for i in order]
    n_test = round_half_up(beta * len(users))
    split = ColdStartSplit(
        beta=beta,
        seed=seed,
        test_users=frozenset(shuffled[:n_test]),
        train_users=frozenset(shuffled[n_test:]),
    )
    logger.info(
        "Cold-start split beta=%.2f seed=%d: %d test / %d train overlapping users",
        beta,
        seed,
        len(split.test_users),
        len(split.train_users),
    )
    return split


def assert_no_leakage(split: ColdStartSplit, training_users: Iterable[str]) -> None:
    """Raise ProtocolError if any test user reaches a target training batch."""
    leaked = split.test_users & set(training_users)
    if leaked:
        sample = ", ".join(sorted(leaked)[:5])
        raise ProtocolError(f"{len(leaked)} cold-start test users found in training data: {sample}")


__all__ = [
    "ColdStartSplit",
    "STANDARD_BETAS",
    "assert_no_leakage",
    "cold_start_split",
    "overlapping_users",
    "round_half_up",
]
