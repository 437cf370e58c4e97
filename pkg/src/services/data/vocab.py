"""Dense id -> index vocabularies built in first-seen order."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from src.lib.errors import EmbeddingIndexError

PAD_TOKEN = "<pad>"


class Vocabulary:
    """Maps string ids to dense 0-based indices, stable across reloads."""

    def __init__(self, tokens: Iterable[str] = (), *, pad: bool = False) -> None:
        self._index: dict[str, int] = {}
        self._tokens: list[str] = []
        self.has_pad = pad
        if pad:
            self.add(PAD_TOKEN)
        for token in tokens:
            self.add(token)

    def add(self, token: str) -> int:
        index = self._index.get(token)
        if index is None:
            index = len(self._tokens)
            self._index[token] = index
            self._tokens.append(token)
        return index

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise EmbeddingIndexError(f"Unknown id '{token}'") from None

    def get(self, token: str, default: int | None = None) -> int | None:
        return self._index.get(token, default)

    def lookup_or_pad(self, token: str) -> int:
        """Index of `token`, or the pad index when unknown (pad vocabularies only)."""
        index = self._index.get(token)
        if index is None:
            if not self.has_pad:
                raise EmbeddingIndexError(f"Unknown id '{token}'")
            return 0
        return index

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self._tokens == other._tokens and self.has_pad == other.has_pad

    def to_dict(self) -> dict:
        tokens = self._tokens[1:] if self.has_pad else self._tokens
        return {"pad": self.has_pad, "tokens": list(tokens)}

    @classmethod
    def from_dict(cls, payload: dict) -> "Vocabulary":
        return cls(payload.get("tokens", []), pad=bool(payload.get("pad", False)))


@dataclass(slots=True)
class ModelVocabulary:
    """Every vocabulary a model needs to turn samples into table rows."""

    users: Vocabulary = field(default_factory=Vocabulary)
    items_src: Vocabulary = field(default_factory=lambda: Vocabulary(pad=True))
    items_tgt: Vocabulary = field(default_factory=Vocabulary)
    categories: Vocabulary = field(default_factory=lambda: Vocabulary(pad=True))
    domains: Vocabulary = field(default_factory=Vocabulary)
    source_domain: str = "source"

    def to_dict(self) -> dict:
        return {
            "users": self.users.to_dict(),
            "items_src": self.items_src.to_dict(),
            "items_tgt": self.items_tgt.to_dict(),
            "categories": self.categories.to_dict(),
            "domains": self.domains.to_dict(),
            "source_domain": self.source_domain,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelVocabulary":
        return cls(
            users=Vocabulary.from_dict(payload["users"]),
            items_src=Vocabulary.from_dict(payload["items_src"]),
            items_tgt=Vocabulary.from_dict(payload["items_tgt"]),
            categories=Vocabulary.from_dict(payload["categories"]),
            domains=Vocabulary.from_dict(payload["domains"]),
            source_domain=payload.get("source_domain", "source"),
        )


__all__ = ["ModelVocabulary", "PAD_TOKEN", "Vocabulary"]
