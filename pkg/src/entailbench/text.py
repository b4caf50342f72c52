"""Shared string normalization: argument keys, predicate keys, and the
small morphological rule table used for lexicon and graph lookups."""

from __future__ import annotations

import re
from typing import Iterable, Optional, Sequence

_WS = re.compile(r"\s+")
_WORD = re.compile(r"\w+", re.UNICODE)

# Suffix rewrite table for base-form candidates, applied in order.
# Candidates are only accepted against a vocabulary, so aggressive
# rules ("is" -> "i") cannot misfire on their own.
_SUFFIX_RULES: tuple[tuple[str, str], ...] = (
    ("sses", "ss"),
    ("ies", "y"),
    ("ves", "f"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("s", ""),
    ("es", ""),
    ("es", "e"),
    ("ied", "y"),
    ("ed", ""),
    ("ed", "e"),
    ("ing", ""),
    ("ing", "e"),
)


def norm_arg(value: str) -> str:
    """Case-fold and collapse whitespace in an argument string."""
    return _WS.sub(" ", value.strip()).casefold()


def norm_tokens(tokens: Iterable[str]) -> tuple[str, ...]:
    """Case-fold predicate tokens, dropping empty ones."""
    out = []
    for tok in tokens:
        tok = _WS.sub(" ", str(tok).strip()).casefold()
        if tok:
            out.append(tok)
    return tuple(out)


def pair_key(subject: str, obj: str) -> tuple[str, str]:
    """Oriented argument-pair key (subject role first)."""
    return (norm_arg(subject), norm_arg(obj))


def unordered_pair_key(subject: str, obj: str) -> tuple[str, str]:
    """Role-insensitive argument-pair key, used for frequency statistics."""
    a, b = norm_arg(subject), norm_arg(obj)
    return (a, b) if a <= b else (b, a)


def base_forms(token: str) -> list[str]:
    """Candidate base forms of a single token, most specific first.

    The token itself is always the first candidate. Rewrites that
    would leave fewer than two characters are dropped.
    """
    token = token.casefold()
    candidates = [token]
    for suffix, repl in _SUFFIX_RULES:
        if token.endswith(suffix) and len(token) > len(suffix):
            base = token[: -len(suffix)] + repl
            if len(base) >= 2 and base not in candidates:
                candidates.append(base)
    return candidates


def normalize_token(token: str, vocabulary: Optional[set[str]] = None) -> str:
    """Reduce a token to the first base form found in ``vocabulary``.

    Without a vocabulary this is just a case-fold: unconditional
    stemming is not safe for corpus-side keys.
    """
    if vocabulary is None:
        return token.casefold()
    for cand in base_forms(token):
        if cand in vocabulary:
            return cand
    return token.casefold()


def tokenize(text: str) -> list[str]:
    """Whitespace/punctuation tokenizer for TF-IDF style bag-of-words."""
    return [m.group(0).casefold() for m in _WORD.finditer(text)]


def join_tokens(tokens: Sequence[str]) -> str:
    return " ".join(tokens)
