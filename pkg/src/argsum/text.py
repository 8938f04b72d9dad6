"""Text primitives shared by every stage.

Two tokenization rules coexist on purpose and must not be conflated:

* ``word_count`` / ``words`` — a word is a maximal run of non-whitespace
  characters. Used for all length filters and length statistics.
* ``tokenize`` — lowercase, split on non-alphanumeric. Used by all metrics
  and by the lexical embedder. Absolute metric values depend on this rule;
  it is fixed here so every oracle in the test suite is reproducible.
"""

from __future__ import annotations

import re

# Alphanumeric runs in any script; underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_WORD_RE = re.compile(r"\S+")


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return " ".join(text.split())


def words(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def word_count(text: str) -> int:
    return len(words(text))


def tokenize(text: str) -> list[str]:
    """Metric tokenization: lowercase, split on non-alphanumeric."""
    return _TOKEN_RE.findall(text.lower())


def truncate_words(text: str, max_words: int) -> str:
    """Cut ``text`` after ``max_words`` whitespace words, keeping original spacing."""
    if max_words < 0:
        raise ValueError("max_words must be >= 0")
    matches = list(_WORD_RE.finditer(text))
    if len(matches) <= max_words:
        return text
    if max_words == 0:
        return ""
    return text[: matches[max_words - 1].end()]
