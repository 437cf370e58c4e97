"""Per-sample source-domain behaviour sequences with timestamp-causal filtering."""

from __future__ import annotations

import logging
import threading
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping

from cachetools import LRUCache

from src.lib.models import InteractionRecord
from src.lib.settings import context_cache_size
from src.services.data.vocab import PAD_TOKEN

logger = logging.getLogger(__name__)

DEFAULT_MAX_LEN = 50


@dataclass(frozen=True, slots=True)
class UserContext:
    """Behaviour channel plus aligned side-info channel for one sample.

    Both sequences are time-ascending, hold between 1 and L entries, and
    collapse to a single padding token when no history survives the cutoff.
    """

    user_id: str
    behavior_seq: tuple[str, ...]
    side_seq: tuple[str, ...]
    cutoff_ts: int | None

    @property
    def is_padding(self) -> bool:
        return self.behavior_seq == (PAD_TOKEN,)

    def __len__(self) -> int:
        return len(self.behavior_seq)


def _finalize(
    user_id: str,
    events: list[tuple[int, str]],
    cutoff_ts: int | None,
    max_len: int,
    categories: Mapping[str, str] | None,
) -> UserContext:
    tail = events[-max_len:] if max_len > 0 else []
    if not tail:
        return UserContext(user_id, (PAD_TOKEN,), (PAD_TOKEN,), cutoff_ts)
    items = tuple(item for _, item in tail)
    lookup = categories or {}
    side = tuple(lookup.get(item, PAD_TOKEN) for item in items)
    return UserContext(user_id, items, side, cutoff_ts)


def build_context(
    user: str,
    records: Iterable[InteractionRecord],
    cutoff_ts: int | None,
    max_len: int = DEFAULT_MAX_LEN,
    causal: bool = True,
    *,
    source_domain: str = "source",
    categories: Mapping[str, str] | None = None,
) -> UserContext:
    """Collect `user`'s source events strictly before `cutoff_ts`, keep the last L."""
    events = [
        (record.timestamp, record.item_id)
        for record in records
        if record.user_id == user and record.domain_id == source_domain
    ]
    # stable: equal timestamps keep input order
    events.sort(key=lambda event: event[0])
    if causal and cutoff_ts is not None:
        events = [event for event in events if event[0] < cutoff_ts]
    return _finalize(user, events, cutoff_ts if causal else None, max_len, categories)


class HistoryIndex:
    """Pre-sorted per-user source histories with cached context construction."""

    def __init__(
        self,
        records: Iterable[InteractionRecord],
        *,
        source_domain: str,
        categories: Mapping[str, str] | None = None,
        cache_size: int | None = None,
    ) -> None:
        self._source_domain = source_domain
        self._categories = dict(categories or {})
        grouped: dict[str, list[tuple[int, str]]] = {}
        for record in records:
            if record.domain_id == source_domain:
                grouped.setdefault(record.user_id, []).append((record.timestamp, record.item_id))
        self._events: dict[str, list[tuple[int, str]]] = {}
        self._times: dict[str, list[int]] = {}
        for user, events in grouped.items():
            events.sort(key=lambda event: event[0])
            self._events[user] = events
            self._times[user] = [ts for ts, _ in events]
        self._cache: LRUCache = LRUCache(maxsize=cache_size or context_cache_size())
        self._lock = threading.Lock()

    @property
    def source_domain(self) -> str:
        return self._source_domain

    def has_history(self, user: str) -> bool:
        return user in self._events

    def context(
        self,
        user: str,
        cutoff_ts: int | None,
        max_len: int = DEFAULT_MAX_LEN,
        causal: bool = True,
    ) -> UserContext:
        key = (user, cutoff_ts if causal else None, max_len, causal)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        events = self._events.get(user, [])
        if causal and cutoff_ts is not None:
            events = events[: bisect_left(self._times.get(user, []), cutoff_ts)]
        built = _finalize(user, events, cutoff_ts if causal else None, max_len, self._categories)
        with self._lock:
            self._cache[key] = built
        return built


__all__ = ["DEFAULT_MAX_LEN", "HistoryIndex", "UserContext", "build_context"]
