#!/usr/bin/env python3
"""Thin wrapper so the CLI runs from a checkout without installation.

Usage example:
  python scripts/dacdr.py gradcheck --op softmax
"""

from __future__ import annotations

import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]


def _ensure_project_root() -> None:
    if str(PROJECT_ROOT) not in sys.path:
        sys.path.insert(0, str(PROJECT_ROOT))


def main(argv: list[str] | None = None) -> int:
    _ensure_project_root()
    from src.cli.main import main as cli_main

    return cli_main(argv)


if __name__ == "__main__":
    raise SystemExit(main())
