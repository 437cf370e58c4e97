"""Helpers for aligned plain-text tables printed to the console."""

from __future__ import annotations

from typing import Any, Mapping, Sequence


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def format_table(rows: Sequence[Mapping[str, Any]], columns: Sequence[str] | None = None) -> str:
    """Return rows rendered as left-aligned columns with a dashed header rule."""
    if not rows:
        return ""
    columns = list(columns or rows[0].keys())
    cells = [[_cell(row.get(col)) for col in columns] for row in rows]
    widths = [
        max(len(col), *(len(line[idx]) for line in cells)) for idx, col in enumerate(columns)
    ]
    header = "  ".join(col.ljust(width) for col, width in zip(columns, widths))
    rule = "  ".join("-" * width for width in widths)
    body = ["  ".join(value.ljust(width) for value, width in zip(line, widths)) for line in cells]
    return "\n".join([header.rstrip(), rule] + [line.rstrip() for line in body])


__all__ = ["format_table"]
