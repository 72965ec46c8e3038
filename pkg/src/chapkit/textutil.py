"""Shared text analysis helpers: index/query tokenization and stopwords."""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[0-9a-z]+")
_RAW_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")


def analyze(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters, dropping empties."""
    return _TOKEN_RE.findall(text.lower())


def raw_tokens(text: str) -> list[str]:
    """Alphanumeric tokens with their original casing preserved."""
    return _RAW_TOKEN_RE.findall(text)


# Small English stopword list for keyword extraction; intentionally compact
# so baseline titles stay reproducible without external resources.
STOPWORDS = frozenset(
    """
    a about above after again all am an and any are as at be because been
    before being below between both but by could did do does doing down
    during each few for from further had has have having he her here hers
    him his how i if in into is it its just me more most my no nor not of
    off on once only or other our out over own same she so some such than
    that the their them then there these they this those through to too
    under until up very was we were what when where which while who whom
    why will with would you your yours
    """.split()
)
