"""Environment-driven process settings.

Values are read lazily so a `.env` loaded by the CLI takes effect.
"""

from __future__ import annotations

import os


def _env_first(*names: str) -> str | None:
    for name in names:
        value = os.environ.get(name)
        if value:
            return value
    return None


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def log_level() -> str:
    return (_env_first("DACDR_LOG_LEVEL", "LOG_LEVEL") or "INFO").upper()


def log_file() -> str | None:
    return _env_first("DACDR_LOG_FILE")


def eval_workers() -> int:
    return max(1, _env_int("DACDR_EVAL_WORKERS", 1))


def context_cache_size() -> int:
    return max(1, _env_int("DACDR_CONTEXT_CACHE_SIZE", 65536))


__all__ = ["context_cache_size", "eval_workers", "log_file", "log_level"]
