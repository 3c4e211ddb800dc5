"""Shared text utilities: tokenization and whitespace normalization.

The same tokenizer feeds the detector features, the BM25 index, and the
retrieval queries, so chemical tokens ("4h2o", "no3") survive intact.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_WS_RE = re.compile(r"\s+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run; digit-bearing tokens kept."""
    return _TOKEN_RE.findall(text.lower())


def collapse_ws(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WS_RE.sub(" ", text).strip()


def normalize_for_match(value: str) -> str:
    """Case-fold and whitespace-collapse a value for equality comparison."""
    return collapse_ws(value).casefold()
