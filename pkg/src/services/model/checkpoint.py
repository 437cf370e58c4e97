"""Versioned text checkpoint container.

Layout::

    DACDR-CHECKPOINT 1
    meta {"model_config": ..., "variant": ..., ...}
    group <name> <rows> <cols> <trainable>
    <row 0 as float.hex values>
    ...
    end

Values are written with `float.hex`, so a write/read round trip is bit-exact
and rewriting the same parameters yields byte-identical files.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from src.lib.errors import UsageError
from src.services.model.params import ParamStore

logger = logging.getLogger(__name__)

MAGIC = "DACDR-CHECKPOINT"
VERSION = 1


class CheckpointFormatError(UsageError):
    """The file is not a readable checkpoint."""


@dataclass(slots=True)
class CheckpointPayload:
    meta: dict[str, Any]
    params: ParamStore = field(default_factory=ParamStore)


def write_checkpoint(path: str | Path, meta: dict[str, Any], params: ParamStore) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{MAGIC} {VERSION}", "meta " + json.dumps(meta, sort_keys=True, separators=(",", ":"))]
    for name, tensor in params.items():
        lines.append(f"group {name} {tensor.rows} {tensor.cols} {int(tensor.requires_grad)}")
        for row in tensor.data:
            lines.append(" ".join(float(value).hex() for value in row))
    lines.append("end")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote checkpoint %s (%d groups)", path, len(params))
    return path


def read_checkpoint(path: str | Path) -> CheckpointPayload:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"Checkpoint not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != f"{MAGIC} {VERSION}":
        raise CheckpointFormatError(f"{path}: not a version {VERSION} checkpoint")
    if len(lines) < 2 or not lines[1].startswith("meta "):
        raise CheckpointFormatError(f"{path}: missing meta line")
    payload = CheckpointPayload(meta=json.loads(lines[1][len("meta ") :]))
    cursor = 2
    while cursor < len(lines) and lines[cursor] != "end":
        header = lines[cursor].split()
        if len(header) != 5 or header[0] != "group":
            raise CheckpointFormatError(f"{path}:{cursor + 1}: bad group header")
        _, name, rows, cols, trainable = header
        n_rows, n_cols = int(rows), int(cols)
        body = lines[cursor + 1 : cursor + 1 + n_rows]
        if len(body) != n_rows:
            raise CheckpointFormatError(f"{path}: group '{name}' is truncated")
        data = np.array(
            [[float.fromhex(value) for value in line.split()] for line in body],
            dtype=np.float64,
        ).reshape(n_rows, n_cols)
        payload.params.add(name, data, trainable=trainable == "1")
        cursor += 1 + n_rows
    if cursor >= len(lines):
        raise CheckpointFormatError(f"{path}: missing end marker")
    return payload


__all__ = ["CheckpointFormatError", "CheckpointPayload", "MAGIC", "read_checkpoint", "write_checkpoint"]
