"""Structured report output: JSON files first, console tables second."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Sequence

from pydantic import BaseModel

from src.lib.format_table import format_table
from src.services.evaluation.evaluator import EvalReport

logger = logging.getLogger(__name__)


def _payload(report: BaseModel | dict[str, Any] | Sequence[BaseModel]) -> Any:
    if isinstance(report, BaseModel):
        return report.model_dump(mode="json")
    if isinstance(report, dict):
        return report
    return [item.model_dump(mode="json") for item in report]


def dumps_report(report: BaseModel | dict[str, Any] | Sequence[BaseModel]) -> str:
    return json.dumps(_payload(report), indent=2, sort_keys=True) + "\n"


def write_report(path: str | Path, report: BaseModel | dict[str, Any] | Sequence[BaseModel]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report), encoding="utf-8")
    logger.info("Wrote report %s", path)
    return path


def report_table(reports: EvalReport | Sequence[EvalReport]) -> str:
    """Aligned table: a sweep's rows, or one row per single-variant report."""
    if isinstance(reports, EvalReport):
        if reports.rows:
            return format_table(reports.rows)
        reports = [reports]
    rows = [
        {"variant": r.variant, "beta": r.split.get("beta"), **r.metrics, "samples": r.samples}
        for r in reports
    ]
    return format_table(rows)


__all__ = ["dumps_report", "report_table", "write_report"]
