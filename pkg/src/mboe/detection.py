"""All-candidate entity detection over documents.

Every occurrence of every dictionary mention in the normalized text
yields one detected item per candidate entity that resolves to a QID;
overlapping and nested matches are all kept, and no disambiguation is
performed.  Spans are UTF-8 byte offsets into the original document
text.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._text import ScanText
from .corpus import Document
from .dictionary import InterLanguageMap, MentionEntityDictionary
from .errors import ConfigurationError, MissingGoldEntitiesError

@dataclass(frozen=True)
class DetectedEntity:
    """One candidate occurrence: QID, commonness prior, byte span, surface."""

    qid: str
    commonness: float
    start: int
    end: int
    mention: str


@dataclass(frozen=True)
class BagOfEntities:
    """The detected candidates of one document, in (start, end) order."""

    items: tuple[DetectedEntity, ...]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def qids(self) -> tuple[str, ...]:
        return tuple(item.qid for item in self.items)


EMPTY_BAG = BagOfEntities(items=())


class Detector:
    """Reusable detector for one (dictionary, inter-language map) pair.

    Builds the match automaton once over the dictionary mentions that have
    at least one QID-resolvable candidate; detection over a corpus then
    shares it read-only.

    boundary_mode restricts matches to those whose adjacent normalized
    characters are not letters (for space-delimited scripts); default off,
    since matching at every offset is required for unsegmented scripts.
    max_entities, when set, keeps only the highest-commonness items
    (earlier spans win ties).
    """

    def __init__(
        self,
        dictionary: MentionEntityDictionary,
        ilmap: InterLanguageMap,
        *,
        boundary_mode: bool = False,
        max_entities: int | None = None,
    ):
        from .scanner import Automaton

        if max_entities is not None and max_entities < 0:
            raise ConfigurationError("max_entities must be nonnegative")
        self.dictionary = dictionary
        self.ilmap = ilmap
        self.language = dictionary.language
        self.boundary_mode = boundary_mode
        self.max_entities = max_entities
        # candidates resolved to QIDs ahead of time; mentions with no
        # resolvable candidate never enter the automaton
        self._resolved: list[list[tuple[str, float]]] = []
        patterns: list[str] = []
        for mention in dictionary.mentions():
            resolved = [
                (qid, cand.commonness)
                for cand in dictionary.candidates(mention)
                if (qid := ilmap.get(self.language, cand.title)) is not None
            ]
            if resolved:
                patterns.append(mention)
                self._resolved.append(resolved)
        self._automaton = Automaton(patterns) if patterns else None

    def detect(self, doc: Document) -> BagOfEntities:
        """Scan one document; pure function of (text, dictionary, map)."""
        if doc.language != self.language:
            raise ConfigurationError(
                f"document {doc.id!r} is {doc.language!r} but detector is {self.language!r}"
            )
        if self._automaton is None or not doc.text:
            return EMPTY_BAG
        scan = ScanText(doc.text)
        if not scan.text:
            return EMPTY_BAG
        matches = self._automaton.scan(scan.text)
        if self.boundary_mode:
            text = scan.text
            n = len(text)
            matches = [
                (start, end, pid)
                for start, end, pid in matches
                if (start == 0 or not text[start - 1].isalpha())
                and (end == n or not text[end].isalpha())
            ]
        items: list[DetectedEntity] = []
        for start, end, pid in matches:
            byte_start, byte_end = scan.byte_span(start, end)
            surface = scan.surface(start, end)
            for qid, commonness in self._resolved[pid]:
                items.append(DetectedEntity(qid, commonness, byte_start, byte_end, surface))
        if self.max_entities is not None and len(items) > self.max_entities:
            ranked = sorted(range(len(items)), key=lambda i: (-items[i].commonness, i))
            keep = sorted(ranked[: self.max_entities])
            items = [items[i] for i in keep]
        return BagOfEntities(items=tuple(items))

    def detect_corpus(self, docs: Sequence[Document], threads: int = 1) -> list[BagOfEntities]:
        """Detect over many documents; output order always matches input order."""
        if threads <= 1 or len(docs) <= 1:
            return [self.detect(doc) for doc in docs]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(self.detect, docs))


def detect(
    doc: Document,
    dictionary: MentionEntityDictionary,
    ilmap: InterLanguageMap,
    **options,
) -> BagOfEntities:
    """One-shot detection; builds a throwaway Detector."""
    return Detector(dictionary, ilmap, **options).detect(doc)


def subsample(bag: BagOfEntities, keep_rate: float, rng_seed: int) -> BagOfEntities:
    """Keep each item independently with probability keep_rate (seeded)."""
    if not 0.0 <= keep_rate <= 1.0:
        raise ValueError(f"keep_rate must be in [0, 1], got {keep_rate}")
    if not bag.items:
        return bag
    rng = np.random.default_rng(rng_seed)
    draws = rng.random(len(bag.items))
    kept = tuple(item for item, draw in zip(bag.items, draws) if draw < keep_rate)
    return BagOfEntities(items=kept)


def subsample_seed(base_seed: int, doc_id: str) -> int:
    """Stable per-document seed so corpus subsampling is reproducible
    regardless of document order."""
    digest = blake2b(doc_id.encode("utf-8"), digest_size=8, key=str(base_seed).encode()).digest()
    return int.from_bytes(digest, "little")


def from_gold(doc: Document) -> BagOfEntities:
    """Bag built from oracle annotations: one item per gold QID, commonness
    1.0 (hyperlinks are already disambiguated), empty spans, duplicates
    preserved."""
    if doc.gold_entities is None:
        raise MissingGoldEntitiesError(
            f"document {doc.id!r} has no gold_entities; use detect() instead"
        )
    items = tuple(DetectedEntity(qid, 1.0, 0, 0, "") for qid in doc.gold_entities)
    return BagOfEntities(items=items)


def detection_stats(
    docs: Iterable[Document],
    detectors: Mapping[str, Detector],
    *,
    on_missing_language: str = "error",
) -> dict[str, float]:
    """Per-language arithmetic mean of detected-entity counts.

    on_missing_language: "error" raises when a document's language has no
    detector; "skip" ignores such documents (callers may count them).
    """
    totals: dict[str, int] = {}
    counts: dict[str, int] = {}
    n_docs = 0
    for doc in docs:
        n_docs += 1
        detector = detectors.get(doc.language)
        if detector is None:
            if on_missing_language == "skip":
                continue
            raise ConfigurationError(f"no detector for language {doc.language!r} (document {doc.id!r})")
        bag = detector.detect(doc)
        totals[doc.language] = totals.get(doc.language, 0) + len(bag)
        counts[doc.language] = counts.get(doc.language, 0) + 1
    if n_docs == 0:
        raise ValueError("empty corpus")
    return {lang: totals[lang] / counts[lang] for lang in sorted(counts)}


def bag_to_json(doc_id: str, bag: BagOfEntities) -> dict:
    return {
        "id": doc_id,
        "entities": [
            {
                "qid": item.qid,
                "p": item.commonness,
                "start": item.start,
                "end": item.end,
                "mention": item.mention,
            }
            for item in bag.items
        ],
    }


def bag_from_json(obj: dict) -> tuple[str, BagOfEntities]:
    items = tuple(
        DetectedEntity(e["qid"], float(e["p"]), int(e["start"]), int(e["end"]), e["mention"])
        for e in obj["entities"]
    )
    return str(obj["id"]), BagOfEntities(items=items)


def save_detections(
    pairs: Iterable[tuple[str, BagOfEntities]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, bag in pairs:
            fh.write(json.dumps(bag_to_json(doc_id, bag), ensure_ascii=False))
            fh.write("\n")


def load_detections(path: str | Path) -> dict[str, BagOfEntities]:
    result: dict[str, BagOfEntities] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                doc_id, bag = bag_from_json(json.loads(line))
                result[doc_id] = bag
    return result
