"""Placeholder-abstracting tokenizer and vocabulary for log content.

Log messages are split on commas, colons and whitespace, then volatile tokens
(IP addresses, hex literals, application addresses, large integers) are folded
into placeholder tokens so that lines differing only in such values collapse
to the same token sequence.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

PAD = "[PAD]"
CLS = "[CLS]"
IP = "[IP]"
NUM = "[NUM]"
HEX = "[HEX]"
ADDR = "[ADDR]"
UNK = "[UNK]"

#: Reserved tokens in fixed id order (ids 0..6).
RESERVED = (PAD, CLS, IP, NUM, HEX, ADDR, UNK)

DEFAULT_ADDR_PATTERN = r"@[A-Za-z0-9_.]+"

_SEPARATORS = re.compile(r"[,:\s]+")
_OCTET = r"(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)"
_IPV4 = re.compile(rf"{_OCTET}\.{_OCTET}\.{_OCTET}\.{_OCTET}")
_HEX_PREFIXED = re.compile(r"0[xX][0-9a-fA-F]+")
_HEX_BARE = re.compile(r"[0-9a-fA-F]{4,}")
_HEX_LETTER = re.compile(r"[a-fA-F]")
_INT = re.compile(r"\d+")


@dataclass(frozen=True)
class TokenizerConfig:
    """Knobs for tokenization and encoding.

    ``max_len`` counts the leading class token; ``num_threshold`` is the
    smallest integer folded into ``[NUM]``; ``addr_pattern`` matches
    application-internal addresses (full token).
    """

    max_len: int = 24
    num_threshold: int = 10
    addr_pattern: str = DEFAULT_ADDR_PATTERN

    def __post_init__(self):
        if self.max_len < 2:
            raise DataError(f"max_len must be >= 2, got {self.max_len}")

    def to_dict(self) -> dict:
        return {
            "max_len": self.max_len,
            "num_threshold": self.num_threshold,
            "addr_pattern": self.addr_pattern,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TokenizerConfig":
        return cls(**data)


@dataclass(frozen=True)
class TokenSequence:
    """Tokens of one log line, ``[CLS]``-prefixed. ``origin`` is the line id."""

    tokens: tuple[str, ...]
    origin: int = -1


def _replace(token: str, config: TokenizerConfig) -> str:
    # Priority IP -> HEX -> ADDR -> NUM resolves overlaps: a bare digit run
    # is NUM, not HEX, because bare hex requires a letter.
    if _IPV4.fullmatch(token):
        return IP
    if _HEX_PREFIXED.fullmatch(token):
        return HEX
    if _HEX_BARE.fullmatch(token) and _HEX_LETTER.search(token):
        return HEX
    if re.fullmatch(config.addr_pattern, token):
        return ADDR
    if _INT.fullmatch(token) and int(token) >= config.num_threshold:
        return NUM
    return token


def tokenize(content: str, config: TokenizerConfig, origin: int = -1) -> TokenSequence:
    """Split on separators (runs collapse), abstract placeholders, prepend [CLS]."""
    parts = [p for p in _SEPARATORS.split(content) if p]
    tokens = [CLS] + [_replace(p, config) for p in parts]
    return TokenSequence(tokens=tuple(tokens), origin=origin)


class Vocabulary:
    """Bijective token <-> id map with a fixed reserved prefix."""

    VERSION = 1

    def __init__(self, tokens: Sequence[str] | None = None):
        tokens = list(tokens) if tokens is not None else list(RESERVED)
        if tuple(tokens[: len(RESERVED)]) != RESERVED:
            raise DataError("vocabulary must start with the reserved tokens")
        if len(set(tokens)) != len(tokens):
            raise DataError("vocabulary tokens must be unique")
        self._tokens: list[str] = tokens
        self._ids: dict[str, int] = {t: i for i, t in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self._tokens)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, self._ids[UNK])

    def token_of(self, token_id: int) -> str:
        return self._tokens[token_id]

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    def save(self, path: str | Path) -> None:
        payload = {"version": self.VERSION, "tokens": self._tokens}
        Path(path).write_text(json.dumps(payload, separators=(",", ":")) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("version") != cls.VERSION:
            raise DataError(f"unsupported vocabulary version: {payload.get('version')!r}")
        return cls(payload["tokens"])


def build_vocab(sequences: Iterable[TokenSequence], min_count: int = 1) -> Vocabulary:
    """Count token frequencies and keep tokens seen at least ``min_count`` times.

    Ids follow the reserved block in descending-frequency order, ties broken
    lexicographically, so the result is deterministic for a given stream.
    """
    if min_count < 1:
        raise DataError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    reserved = set(RESERVED)
    for seq in sequences:
        counts.update(t for t in seq.tokens if t not in reserved)
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(list(RESERVED) + kept)


def encode(seq: TokenSequence, vocab: Vocabulary, config: TokenizerConfig) -> np.ndarray:
    """Fixed-length id vector: truncate to ``max_len``, pad with [PAD]."""
    ids = np.full(config.max_len, vocab.pad_id, dtype=np.int64)
    for pos, token in enumerate(seq.tokens[: config.max_len]):
        ids[pos] = vocab.id_of(token)
    return ids


def decode(ids: np.ndarray, vocab: Vocabulary) -> list[str]:
    """Inverse of :func:`encode` up to truncation; pads are stripped."""
    pad = vocab.pad_id
    return [vocab.token_of(int(i)) for i in ids if int(i) != pad]
