"""Cross-domain dataset: records, side info and per-sample assembly."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

from src.lib.errors import DataError
from src.lib.models import InteractionRecord, OutputMode, Schema, label_for
from src.services.data.context import DEFAULT_MAX_LEN, HistoryIndex, UserContext
from src.services.data.ingest import DEFAULT_MAX_MALFORMED_FRAC, load_interactions
from src.services.data.split import ColdStartSplit, overlapping_users
from src.services.data.vocab import ModelVocabulary, Vocabulary

logger = logging.getLogger(__name__)

Part = Literal["train", "test"]


@dataclass(frozen=True, slots=True)
class Sample:
    """Everything one forward pass needs, already causally filtered."""

    user_id: str
    item_id: str
    domain_id: str
    label: float
    timestamp: int
    context: UserContext


class CrossDomainDataset:
    """Interactions of one source domain and one or more target domains."""

    def __init__(
        self,
        records: Sequence[InteractionRecord],
        side_info: dict[str, str] | None = None,
        *,
        schema: Schema = "logit",
        source_domain: str = "source",
        target_domains: Sequence[str] = ("target",),
        name: str = "dataset",
        cache_size: int | None = None,
    ) -> None:
        if source_domain in target_domains:
            raise DataError(f"Domain '{source_domain}' cannot be both source and target")
        self.records = list(records)
        self.side_info = dict(side_info or {})
        self.schema: Schema = schema
        self.source_domain = source_domain
        self.target_domains = tuple(target_domains)
        self.name = name
        self.history = HistoryIndex(
            self.records,
            source_domain=source_domain,
            categories=self.side_info,
            cache_size=cache_size,
        )

    @classmethod
    def from_files(
        cls,
        interactions_path: str | Path,
        side_info_path: str | Path | None = None,
        *,
        schema: Schema = "logit",
        source_domain: str = "source",
        target_domains: Sequence[str] = ("target",),
        max_malformed_frac: float = DEFAULT_MAX_MALFORMED_FRAC,
    ) -> "CrossDomainDataset":
        loaded = load_interactions(
            interactions_path,
            schema,
            (source_domain, *target_domains),
            side_info_path=side_info_path,
            max_malformed_frac=max_malformed_frac,
        )
        return cls(
            loaded.records,
            loaded.side_info,
            schema=schema,
            source_domain=source_domain,
            target_domains=target_domains,
            name=Path(interactions_path).parent.name or Path(interactions_path).stem,
        )

    # -- views ----------------------------------------------------------

    @property
    def source_records(self) -> list[InteractionRecord]:
        return [r for r in self.records if r.domain_id == self.source_domain]

    @property
    def target_records(self) -> list[InteractionRecord]:
        targets = set(self.target_domains)
        return [r for r in self.records if r.domain_id in targets]

    def overlapping_users(self) -> list[str]:
        return overlapping_users(self.records, self.source_domain, self.target_domains)

    def target_partition(
        self, split: ColdStartSplit
    ) -> tuple[list[InteractionRecord], list[InteractionRecord]]:
        return split.partition(self.records, self.target_domains)

    def mean_target_signal(self, records: Iterable[InteractionRecord] | None = None) -> float:
        values = [r.signal for r in (self.target_records if records is None else records)]
        return float(sum(values) / len(values)) if values else 0.0

    def vocabulary(self) -> ModelVocabulary:
        """Dense vocabularies in first-seen order over the whole dataset.

        Cold-start test users are included: their source rows are learned from
        source behaviour, and no target label of theirs is ever read.
        """
        users = Vocabulary(r.user_id for r in self.records)
        items_src = Vocabulary((r.item_id for r in self.source_records), pad=True)
        items_tgt = Vocabulary(r.item_id for r in self.target_records)
        categories = Vocabulary(self.side_info.values(), pad=True)
        return ModelVocabulary(
            users=users,
            items_src=items_src,
            items_tgt=items_tgt,
            categories=categories,
            domains=Vocabulary(self.target_domains),
            source_domain=self.source_domain,
        )

    # -- sample assembly ------------------------------------------------

    def samples(
        self,
        records: Iterable[InteractionRecord],
        output_mode: OutputMode,
        *,
        max_len: int = DEFAULT_MAX_LEN,
        causal: bool = True,
    ) -> list[Sample]:
        """Attach a context whose cutoff is each sample's own timestamp."""
        built: list[Sample] = []
        for record in records:
            context = self.history.context(record.user_id, record.timestamp, max_len, causal)
            built.append(
                Sample(
                    user_id=record.user_id,
                    item_id=record.item_id,
                    domain_id=record.domain_id,
                    label=label_for(record.signal, self.schema, output_mode),
                    timestamp=record.timestamp,
                    context=context,
                )
            )
        return built

    def target_samples(
        self,
        split: ColdStartSplit,
        part: Part,
        output_mode: OutputMode,
        *,
        max_len: int = DEFAULT_MAX_LEN,
        causal: bool = True,
    ) -> list[Sample]:
        train, test = self.target_partition(split)
        chosen = train if part == "train" else test
        logger.debug("%s: %d target %s samples", self.name, len(chosen), part)
        return self.samples(chosen, output_mode, max_len=max_len, causal=causal)

    def source_samples(
        self,
        output_mode: OutputMode,
        *,
        max_len: int = DEFAULT_MAX_LEN,
        causal: bool = True,
    ) -> list[Sample]:
        return self.samples(self.source_records, output_mode, max_len=max_len, causal=causal)

    def describe(self) -> dict[str, object]:
        return {
            "name": self.name,
            "schema": self.schema,
            "records": len(self.records),
            "source_records": len(self.source_records),
            "target_records": len(self.target_records),
            "overlapping_users": len(self.overlapping_users()),
        }


__all__ = ["CrossDomainDataset", "Part", "Sample"]
