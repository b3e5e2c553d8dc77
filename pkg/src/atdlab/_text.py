"""Low-level text mechanics shared by the public modules.

Tokens, byte offsets, clause and sentence boundaries, and quote-prefix
handling all live here so that the matcher, the rewriter, and the
detectors agree on one definition of each.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# A token is a maximal run of letters, digits, or apostrophes.  Anything
# else separates tokens.
_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")

# Clause delimiters: sentence punctuation, a spaced hyphen, or the
# conjunction "but" standing alone between spaces.
_CLAUSE_SPLIT_RE = re.compile(r"[.!?]+|\s-\s|\sbut\s", re.IGNORECASE)

# Sentence boundary: sentence punctuation followed by whitespace.
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+\s+")

# A run of quote markers at the start of a line, with any spacing.
_QUOTE_PREFIX_RE = re.compile(r"^(?:>[ \t]*)+")


@dataclass(frozen=True)
class Token:
    """One token with its character span in the source string."""

    text: str
    start: int
    end: int

    @property
    def lower(self) -> str:
        return self.text.lower()


def tokenize(text: str) -> list[Token]:
    return [Token(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def token_texts(text: str) -> list[str]:
    """Lowercased token strings, positions discarded."""
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


class ByteMap:
    """Translates character offsets of a string into UTF-8 byte offsets.

    Built once per string; lookups are O(1) afterwards.
    """

    def __init__(self, text: str):
        offsets = [0] * (len(text) + 1)
        total = 0
        for i, ch in enumerate(text):
            offsets[i] = total
            total += len(ch.encode("utf-8"))
        offsets[len(text)] = total
        self._offsets = offsets

    def to_bytes(self, char_index: int) -> int:
        return self._offsets[char_index]

    def span_to_bytes(self, start: int, end: int) -> tuple[int, int]:
        return self._offsets[start], self._offsets[end]


def whitespace_only_between(text: str, left_end: int, right_start: int) -> bool:
    """True when the gap between two character offsets holds only whitespace."""
    between = text[left_end:right_start]
    return between.strip() == ""


def split_clauses(text: str) -> list[tuple[str, int, int]]:
    """Clause substrings with their character spans, delimiters dropped.

    Empty and whitespace-only clauses are skipped.
    """
    clauses: list[tuple[str, int, int]] = []
    last = 0
    for m in _CLAUSE_SPLIT_RE.finditer(text):
        piece = text[last:m.start()]
        if piece.strip():
            clauses.append((piece, last, m.start()))
        last = m.end()
    tail = text[last:]
    if tail.strip():
        clauses.append((tail, last, len(text)))
    return clauses


def sentence_starts(text: str) -> list[int]:
    """Character offsets where sentences begin.

    The body start counts as a boundary; later boundaries follow
    sentence punctuation plus whitespace.  Offsets point at the first
    non-whitespace character of each sentence; trailing whitespace
    after the final punctuation yields no phantom sentence.
    """
    starts: list[int] = []
    first = _first_non_space(text, 0)
    if first is not None:
        starts.append(first)
    for m in _SENTENCE_SPLIT_RE.finditer(text):
        nxt = _first_non_space(text, m.end())
        if nxt is not None:
            starts.append(nxt)
    return starts


def _first_non_space(text: str, pos: int) -> int | None:
    while pos < len(text):
        if not text[pos].isspace():
            return pos
        pos += 1
    return None


def prefix_quote(text: str) -> str:
    """Add one quoting level: every line gains a "> " prefix."""
    return "\n".join("> " + line for line in text.split("\n"))


def normalize_quote_prefix(line: str) -> str:
    """Canonicalize the quote-marker run at the start of a line.

    ">  >   x" and "> > x" carry the same quoting depth; both normalize
    to "> > x".  Lines without a leading marker pass through untouched.
    """
    m = _QUOTE_PREFIX_RE.match(line)
    if not m:
        return line
    depth = m.group(0).count(">")
    return "> " * depth + line[m.end():]


def normalize_quoted_text(text: str) -> str:
    return "\n".join(normalize_quote_prefix(line) for line in text.split("\n"))
