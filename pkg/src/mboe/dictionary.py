"""Mention-entity dictionaries and the inter-language title-to-QID map.

The mention-entity dictionary binds a normalized surface string to the
knowledge-base entities it may refer to, with anchor counts from which
the commonness prior p(entity | mention) is derived as a count ratio.
The inter-language map resolves a (language, title) pair to the unique
cross-lingual QID identifier.

Both structures are built once from tabular extracts, are immutable
afterwards, and persist to a versioned binary container (see _binio).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from . import _binio
from ._text import normalize
from .errors import FormatError, IngestionError, UnknownMentionError

logger = logging.getLogger(__name__)

QID_PATTERN = re.compile(r"^Q[0-9]+$")

_KIND_MENTION = "mention_dictionary"
_KIND_ILMAP = "interlanguage_map"


@dataclass(frozen=True)
class Candidate:
    """One possible referent of a mention."""

    title: str
    count: int
    commonness: float


class MentionEntityDictionary:
    """Per-language map from normalized mention strings to candidate entities.

    `entries` maps mention -> tuple of (title, count), candidates sorted by
    title so that structurally equal inputs build structurally equal
    dictionaries regardless of record order.
    """

    def __init__(self, language: str, entries: Mapping[str, list[tuple[str, int]]]):
        self.language = language.lower()
        self._entries: dict[str, tuple[tuple[str, int], ...]] = {}
        self._totals: dict[str, int] = {}
        for mention, cands in entries.items():
            ordered = tuple(sorted(cands))
            self._entries[mention] = ordered
            self._totals[mention] = sum(c for _, c in ordered)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, mention: str) -> bool:
        return normalize(mention) in self._entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MentionEntityDictionary):
            return NotImplemented
        return self.language == other.language and self._entries == other._entries

    def mentions(self) -> Iterator[str]:
        """Normalized mention keys, in sorted order."""
        return iter(sorted(self._entries))

    def candidates(self, mention: str) -> tuple[Candidate, ...]:
        """All candidates for a mention with their commonness; empty if unknown."""
        key = normalize(mention)
        cands = self._entries.get(key)
        if not cands:
            return ()
        total = self._totals[key]
        return tuple(Candidate(t, c, c / total) for t, c in cands)

    def commonness(self, mention: str, title: str) -> float:
        """Anchor-count ratio p(title | mention); 0.0 for a non-candidate title.

        Raises UnknownMentionError if the mention itself is absent.
        """
        key = normalize(mention)
        cands = self._entries.get(key)
        if cands is None:
            raise UnknownMentionError(mention)
        total = self._totals[key]
        for t, c in cands:
            if t == title:
                return c / total
        return 0.0

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            _binio.write_header(fh, _KIND_MENTION)
            _binio.write_str(fh, self.language)
            _binio.write_u64(fh, len(self._entries))
            for mention in sorted(self._entries):
                _binio.write_str(fh, mention)
                cands = self._entries[mention]
                _binio.write_u64(fh, len(cands))
                for title, count in cands:
                    _binio.write_str(fh, title)
                    _binio.write_u64(fh, count)


class InterLanguageMap:
    """Map from (language, wiki title) to the shared Wikidata QID."""

    def __init__(self, entries: Mapping[tuple[str, str], str]):
        self._entries = {(lang.lower(), title): qid for (lang, title), qid in entries.items()}

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InterLanguageMap):
            return NotImplemented
        return self._entries == other._entries

    def get(self, language: str, title: str) -> str | None:
        """QID for (language, title), or None when unmapped."""
        return self._entries.get((language.lower(), title))

    def items(self) -> Iterator[tuple[tuple[str, str], str]]:
        return iter(self._entries.items())

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            _binio.write_header(fh, _KIND_ILMAP)
            _binio.write_u64(fh, len(self._entries))
            for (lang, title), qid in sorted(self._entries.items()):
                _binio.write_str(fh, lang)
                _binio.write_str(fh, title)
                _binio.write_str(fh, qid)


def build_mention_dictionary(
    records: Iterable[tuple[str, str, int]],
    language: str,
    min_count: int = 1,
) -> MentionEntityDictionary:
    """Aggregate (mention, title, count) records into a dictionary.

    Repeated (mention, title) pairs are summed.  Mention keys are
    normalized (NFKC + casefold), which may merge records.  Candidates
    whose aggregated count falls below `min_count` are dropped;
    min_count=0 or 1 keeps everything.
    """
    if min_count < 0:
        raise ValueError("min_count must be nonnegative")
    counts: dict[str, dict[str, int]] = {}
    for record in records:
        try:
            mention, title, count = record
        except (TypeError, ValueError) as exc:
            raise IngestionError(f"malformed anchor record {record!r}: expected 3 fields") from exc
        if not isinstance(count, int) or isinstance(count, bool):
            raise IngestionError(f"anchor record {record!r}: count must be an integer")
        if count <= 0:
            raise IngestionError(f"anchor record {record!r}: count must be positive")
        key = normalize(mention)
        if not key:
            logger.warning("dropping mention %r: normalizes to empty string", mention)
            continue
        by_title = counts.setdefault(key, {})
        by_title[title] = by_title.get(title, 0) + count
    entries: dict[str, list[tuple[str, int]]] = {}
    for mention, by_title in counts.items():
        kept = [(t, c) for t, c in by_title.items() if c >= min_count]
        if kept:
            entries[mention] = kept
    return MentionEntityDictionary(language, entries)


def build_interlanguage_map(
    records: Iterable[tuple[str, str, str]],
) -> InterLanguageMap:
    """Build the (language, title) -> QID map.

    Duplicate keys with conflicting QIDs are resolved last-write-wins
    with a logged warning.
    """
    entries: dict[tuple[str, str], str] = {}
    for record in records:
        try:
            language, title, qid = record
        except (TypeError, ValueError) as exc:
            raise IngestionError(f"malformed sitelink record {record!r}: expected 3 fields") from exc
        if not QID_PATTERN.match(qid):
            raise IngestionError(f"sitelink record {record!r}: malformed QID {qid!r}")
        key = (language.lower(), title)
        previous = entries.get(key)
        if previous is not None and previous != qid:
            logger.warning(
                "conflicting sitelink for %s/%s: %s overridden by %s", key[0], title, previous, qid
            )
        entries[key] = qid
    return InterLanguageMap(entries)


def read_anchor_records(path: str | Path) -> Iterator[tuple[str, str, int]]:
    """Parse a mention TSV (mention<TAB>wiki_title<TAB>count), one record per line."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise IngestionError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
            mention, title, raw = fields
            try:
                count = int(raw)
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: non-numeric count {raw!r}") from None
            if count <= 0:
                raise IngestionError(f"{path}:{lineno}: count must be positive, got {count}")
            yield mention, title, count


def read_sitelink_records(path: str | Path) -> Iterator[tuple[str, str, str]]:
    """Parse a sitelink TSV (language<TAB>wiki_title<TAB>qid)."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise IngestionError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
            language, title, qid = fields
            if not QID_PATTERN.match(qid):
                raise IngestionError(f"{path}:{lineno}: malformed QID {qid!r}")
            yield language, title, qid


def load_dictionary(path: str | Path) -> MentionEntityDictionary | InterLanguageMap:
    """Load either dictionary kind from its binary container."""
    with open(path, "rb") as fh:
        kind = _binio.read_header(fh)
        if kind == _KIND_MENTION:
            language = _binio.read_str(fh)
            n_mentions = _binio.read_u64(fh)
            entries: dict[str, list[tuple[str, int]]] = {}
            for _ in range(n_mentions):
                mention = _binio.read_str(fh)
                n_cands = _binio.read_u64(fh)
                entries[mention] = [
                    (_binio.read_str(fh), _binio.read_u64(fh)) for _ in range(n_cands)
                ]
            _binio.expect_eof(fh)
            return MentionEntityDictionary(language, entries)
        if kind == _KIND_ILMAP:
            n_entries = _binio.read_u64(fh)
            ilmap_entries: dict[tuple[str, str], str] = {}
            for _ in range(n_entries):
                lang = _binio.read_str(fh)
                title = _binio.read_str(fh)
                ilmap_entries[(lang, title)] = _binio.read_str(fh)
            _binio.expect_eof(fh)
            return InterLanguageMap(ilmap_entries)
        raise FormatError(f"unknown container kind {kind!r}")


def load_mention_dictionary(path: str | Path) -> MentionEntityDictionary:
    loaded = load_dictionary(path)
    if not isinstance(loaded, MentionEntityDictionary):
        raise FormatError(f"{path} does not hold a mention dictionary")
    return loaded


def load_interlanguage_map(path: str | Path) -> InterLanguageMap:
    loaded = load_dictionary(path)
    if not isinstance(loaded, InterLanguageMap):
        raise FormatError(f"{path} does not hold an inter-language map")
    return loaded
