"""Answer/question normalization and token-level comparison.

The normalizer applies four rules, in order: lowercase, strip punctuation
(Unicode categories P*), drop English articles as whole tokens, collapse
whitespace. The same normalizer keys question dedup and exact-match scoring;
ROUGE tokenization reuses it minus the article rule.

Convention notes (not pinned by any external standard): hyphens and unicode
quotes count as punctuation and are removed, not replaced by spaces; no
transliteration is performed.
"""

from __future__ import annotations

import unicodedata

_ARTICLES = frozenset({"a", "an", "the"})


class _PunctStripTable(dict):
    """str.translate mapping deleting category-P* codepoints, memoized."""

    def __missing__(self, cp: int):
        mapped = None if unicodedata.category(chr(cp)).startswith("P") else cp
        self[cp] = mapped
        return mapped


_PUNCT_TABLE = _PunctStripTable()


def normalize_answer(text: str) -> str:
    """Normalize an answer (or question) string. Idempotent.

    >>> normalize_answer("The Moon")
    'moon'
    >>> normalize_answer("Martin   Toonder!")
    'martin toonder'
    """
    stripped = text.lower().translate(_PUNCT_TABLE)
    tokens = [t for t in stripped.split() if t not in _ARTICLES]
    return " ".join(tokens)


def normalize_keep_articles(text: str) -> str:
    """Normalization variant used for question-similarity tokenization."""
    return " ".join(text.lower().translate(_PUNCT_TABLE).split())


def tokenize(text: str) -> list[str]:
    """Normalized tokens with articles removed."""
    return normalize_answer(text).split()


def exact_match(prediction: str, golds: set[str] | frozenset[str] | list[str] | tuple[str, ...]) -> bool:
    """True iff the normalized prediction equals any normalized gold answer."""
    if not golds:
        raise ValueError("exact_match requires a non-empty gold set")
    pred = normalize_answer(prediction)
    return any(pred == normalize_answer(g) for g in golds)


def token_f1(a_tokens: list[str], b_tokens: list[str]) -> float:
    """Multiset token F1 between two token lists.

    Both empty counts as a perfect match (1.0); exactly one empty is 0.0.
    """
    if not a_tokens and not b_tokens:
        return 1.0
    if not a_tokens or not b_tokens:
        return 0.0
    counts: dict[str, int] = {}
    for t in a_tokens:
        counts[t] = counts.get(t, 0) + 1
    overlap = 0
    for t in b_tokens:
        c = counts.get(t, 0)
        if c > 0:
            counts[t] = c - 1
            overlap += 1
    if overlap == 0:
        return 0.0
    precision = overlap / len(b_tokens)
    recall = overlap / len(a_tokens)
    return 2 * precision * recall / (precision + recall)
