"""Ingestion of headered TSV interaction and side-info files."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd
from pydantic import ValidationError

from src.lib.errors import IngestionError
from src.lib.models import InteractionRecord, Schema, SideInfoRecord
from src.services.data.vocab import Vocabulary

logger = logging.getLogger(__name__)

INTERACTION_COLUMNS = ["user_id", "item_id", "domain_id", "signal", "timestamp"]
SIDE_INFO_COLUMNS = ["item_id", "category_id"]
DEFAULT_MAX_MALFORMED_FRAC = 0.01
MAX_SAMPLES = 5


@dataclass(slots=True)
class LoadedInteractions:
    records: list[InteractionRecord]
    users: Vocabulary
    items: Vocabulary
    categories: Vocabulary
    side_info: dict[str, str] = field(default_factory=dict)
    malformed: int = 0
    total_rows: int = 0


def _read_tsv(path: Path, columns: Sequence[str]) -> tuple[pd.DataFrame | None, list[str]]:
    """Read a headered TSV as strings; returns (frame or None if empty, bad lines)."""
    if not path.exists():
        raise IngestionError(f"File not found: {path}")
    if not path.read_text(encoding="utf-8").strip():
        return None, []
    bad_lines: list[str] = []

    def _on_bad_line(fields: list[str]) -> None:
        bad_lines.append("\t".join(fields))
        return None

    frame = pd.read_csv(
        path,
        sep="\t",
        dtype=str,
        keep_default_na=False,
        engine="python",
        on_bad_lines=_on_bad_line,
        encoding="utf-8",
    )
    if list(frame.columns) != list(columns):
        raise IngestionError(
            f"{path.name}: expected header {'/'.join(columns)}, got {'/'.join(map(str, frame.columns))}"
        )
    return frame, bad_lines


def load_side_info(path: str | Path) -> dict[str, str]:
    """Return item -> category; the first category listed for an item wins."""
    path = Path(path)
    frame, bad_lines = _read_tsv(path, SIDE_INFO_COLUMNS)
    if bad_lines:
        logger.warning("%s: skipped %d malformed side-info lines", path.name, len(bad_lines))
    mapping: dict[str, str] = {}
    if frame is None:
        return mapping
    duplicates = 0
    for item_id, category_id in frame.itertuples(index=False, name=None):
        try:
            record = SideInfoRecord(item_id=item_id, category_id=category_id)
        except ValidationError:
            bad_lines.append(f"{item_id}\t{category_id}")
            continue
        if record.item_id in mapping:
            duplicates += 1
            continue
        mapping[record.item_id] = record.category_id
    if duplicates:
        logger.warning("%s: %d duplicate item rows ignored (first wins)", path.name, duplicates)
    return mapping


def load_interactions(
    path: str | Path,
    schema: Schema,
    domains: Iterable[str],
    *,
    side_info_path: str | Path | None = None,
    max_malformed_frac: float = DEFAULT_MAX_MALFORMED_FRAC,
) -> LoadedInteractions:
    """Parse interactions, validating each row against `schema`.

    Malformed rows are counted; more than `max_malformed_frac` of them aborts
    ingestion. A domain outside `domains` always aborts.
    """
    path = Path(path)
    known_domains = set(domains)
    side_info = load_side_info(side_info_path) if side_info_path else {}
    categories = Vocabulary(side_info.values())

    frame, bad_lines = _read_tsv(path, INTERACTION_COLUMNS)
    records: list[InteractionRecord] = []
    users = Vocabulary()
    items = Vocabulary()
    if frame is None:
        logger.info("%s: empty interaction file", path.name)
        return LoadedInteractions(records, users, items, categories, side_info)

    samples = [f"(unparseable) {line}" for line in bad_lines[:MAX_SAMPLES]]
    malformed = len(bad_lines)
    for offset, row in enumerate(frame.itertuples(index=False, name=None)):
        line_no = offset + 2
        user_id, item_id, domain_id, signal, timestamp = row
        if any(_missing(value) for value in row):
            malformed += 1
            if len(samples) < MAX_SAMPLES:
                samples.append(f"line {line_no}: {_join_row(row)} (missing fields)")
            continue
        if domain_id not in known_domains:
            raise IngestionError(f"{path.name}:{line_no}: unknown domain_id '{domain_id}'")
        try:
            record = InteractionRecord(
                user_id=user_id,
                item_id=item_id,
                domain_id=domain_id,
                signal=signal,
                timestamp=timestamp,
            )
        except ValidationError:
            record = None
        if record is None or not record.signal_valid(schema):
            malformed += 1
            if len(samples) < MAX_SAMPLES:
                samples.append(f"line {line_no}: {_join_row(row)}")
            continue
        users.add(record.user_id)
        items.add(record.item_id)
        records.append(record)

    total = len(frame) + len(bad_lines)
    if total and malformed / total > max_malformed_frac:
        raise IngestionError(
            f"{path.name}: {malformed} of {total} rows malformed under '{schema}' schema",
            samples,
        )
    if malformed:
        logger.warning("%s: %d of %d rows malformed and skipped", path.name, malformed, total)
    logger.info(
        "%s: %d records, %d users, %d items, %d categories",
        path.name,
        len(records),
        len(users),
        len(items),
        len(categories),
    )
    return LoadedInteractions(
        records=records,
        users=users,
        items=items,
        categories=categories,
        side_info=side_info,
        malformed=malformed,
        total_rows=total,
    )


def write_interactions(path: str | Path, records: Iterable[InteractionRecord]) -> Path:
    """Write records in the same headered TSV format `load_interactions` reads."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        (
            r.user_id,
            r.item_id,
            r.domain_id,
            _format_signal(r.signal),
            r.timestamp,
        )
        for r in records
    ]
    pd.DataFrame(rows, columns=INTERACTION_COLUMNS).to_csv(
        path, sep="\t", index=False, lineterminator="\n", encoding="utf-8"
    )
    return path


def write_side_info(path: str | Path, mapping: dict[str, str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(mapping.items()), columns=SIDE_INFO_COLUMNS).to_csv(
        path, sep="\t", index=False, lineterminator="\n", encoding="utf-8"
    )
    return path


def _missing(value: object) -> bool:
    """Short rows come back padded with None or NaN; blank fields count as missing too."""
    return not isinstance(value, str) or not value.strip()


def _join_row(row: Sequence[object]) -> str:
    return "\t".join(str(value) for value in row)


def _format_signal(signal: float) -> str:
    return str(int(signal)) if float(signal).is_integer() else repr(float(signal))


__all__ = [
    "INTERACTION_COLUMNS",
    "LoadedInteractions",
    "SIDE_INFO_COLUMNS",
    "load_interactions",
    "load_side_info",
    "write_interactions",
    "write_side_info",
]
