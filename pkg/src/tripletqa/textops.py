"""Tokenization, edit distance, the fuzzy-match indicator and stop words.

These are the string primitives that anchor detection and external-KB
retrieval are built on.  All comparisons downstream assume the
normalization applied here: Unicode NFC, lowercase, punctuation dropped.
"""

from __future__ import annotations

import re
import unicodedata
from pathlib import Path

# Word characters except underscore; hyphens and all other punctuation act
# as token boundaries and are dropped.
_TOKEN_RE = re.compile(r"[^\W_]+")

# Fixed English function-word list (~50 entries).  Overridable via
# load_stopwords().
DEFAULT_STOPWORDS = frozenset(
    """
    a an the and or but if then than that this these those
    of in on at to for from by with about as into over under
    is are was were be been being am
    do does did have has had will would can could should
    it its he she they them we you i
    not no so there here
    """.split()
)


def tokenize(text: str) -> list[str]:
    """Split raw text into lowercase word tokens.

    Punctuation (including hyphens) acts as a boundary and is dropped, so
    "St. Johns, MI" becomes [st, johns, mi].  Empty input yields [].
    """
    normalized = unicodedata.normalize("NFC", text).lower()
    return _TOKEN_RE.findall(normalized)


def normalize_text(tokens: list[str]) -> str:
    """Canonical single-string form of a token list, used as a map key."""
    return " ".join(tokens)


def edit_distance(x: str, y: str) -> int:
    """Character-level Levenshtein distance with unit costs."""
    if x == y:
        return 0
    if not x:
        return len(y)
    if not y:
        return len(x)
    prev = list(range(len(y) + 1))
    for i, cx in enumerate(x, start=1):
        cur = [i] + [0] * len(y)
        for j, cy in enumerate(y, start=1):
            cost = 0 if cx == cy else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def fuzzy_indicator(x: str, y: str) -> int:
    """1 if the edit distance between two tokens is at most 1, else 0."""
    if abs(len(x) - len(y)) > 1:
        return 0
    return 1 if edit_distance(x, y) <= 1 else 0


def remove_stopwords(
    tokens: list[str], stopwords: frozenset[str] = DEFAULT_STOPWORDS
) -> list[str]:
    """Order-preserving removal of stop-list tokens."""
    return [t for t in tokens if t not in stopwords]


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read an override stop-word list, one word per line."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word:
            words.append(word)
    return frozenset(words)
