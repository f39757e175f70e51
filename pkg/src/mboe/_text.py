"""Unicode normalization and scan-text projection.

Mentions and document text are matched in a normalized space: NFKC
followed by default case folding, iterated to a fixpoint.  A single
NFKC+casefold pass is not idempotent for a handful of combining-mark
sequences, and dictionary keys must satisfy normalize(normalize(s)) ==
normalize(s), so the extra iterations (at most two in practice) buy that
guarantee.

Documents are projected character by character so that every position of
the normalized scan text maps back to a character of the original text;
match spans are then reported as UTF-8 byte offsets into the original
document.
"""

from __future__ import annotations

import unicodedata
from functools import lru_cache

_MAX_PASSES = 8


def normalize(s: str) -> str:
    """NFKC + casefold, iterated to a fixpoint (idempotent by construction)."""
    for _ in range(_MAX_PASSES):
        folded = unicodedata.normalize("NFKC", s).casefold()
        if folded == s:
            return s
        s = folded
    return s


@lru_cache(maxsize=None)
def _normalize_char(ch: str) -> str:
    return normalize(ch)


class ScanText:
    """A document text projected into the normalized matching space.

    `text` is the concatenation of the per-character normalizations of the
    original string; `source_index[i]` gives the original character index
    that produced scan character `i`.  Characters whose normalization is
    empty contribute nothing.
    """

    __slots__ = ("original", "text", "source_index", "_byte_offsets")

    def __init__(self, original: str):
        self.original = original
        parts: list[str] = []
        source_index: list[int] = []
        for idx, ch in enumerate(original):
            norm = _normalize_char(ch)
            if norm:
                parts.append(norm)
                source_index.extend([idx] * len(norm))
        self.text = "".join(parts)
        self.source_index = source_index
        self._byte_offsets: list[int] | None = None

    def _offsets(self) -> list[int]:
        # byte offset of each original character, plus the end sentinel
        if self._byte_offsets is None:
            offs = [0]
            total = 0
            for ch in self.original:
                total += len(ch.encode("utf-8"))
                offs.append(total)
            self._byte_offsets = offs
        return self._byte_offsets

    def byte_span(self, start: int, end: int) -> tuple[int, int]:
        """Map a half-open scan-character range to original byte offsets."""
        if start >= end:
            raise ValueError("empty scan span")
        offs = self._offsets()
        first = self.source_index[start]
        last = self.source_index[end - 1]
        return offs[first], offs[last + 1]

    def surface(self, start: int, end: int) -> str:
        """Original surface string covered by a scan-character range."""
        first = self.source_index[start]
        last = self.source_index[end - 1]
        return self.original[first : last + 1]
