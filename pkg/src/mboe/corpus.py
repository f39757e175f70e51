"""Documents, label vocabularies, and JSONL input/output.

Document JSONL: one object per line with fields `id`, `lang`, `text`,
optional `labels` (array of strings), optional `vector` (array of
numbers; a precomputed text-encoder vector), and optional
`gold_entities` (array of QIDs).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .dictionary import QID_PATTERN
from .errors import IngestionError

@dataclass
class Document:
    """One classification example.

    `encoder_vector` stands in for the text-based representation produced
    by an external encoder; when absent, a built-in hashing encoder can
    supply it.  `gold_entities` holds oracle annotations for bypassing
    automatic detection.
    """

    id: str
    language: str
    text: str
    labels: frozenset[str] | None = None
    encoder_vector: np.ndarray | None = None
    gold_entities: list[str] | None = None

    def __post_init__(self):
        self.language = self.language.lower()
        if self.encoder_vector is not None:
            self.encoder_vector = np.asarray(self.encoder_vector, dtype=np.float64)
        if self.labels is not None and not isinstance(self.labels, frozenset):
            self.labels = frozenset(self.labels)


class LabelVocabulary:
    """Immutable, sorted label set shared by classifier head and metrics."""

    def __init__(self, labels: Iterable[str]):
        self._labels = tuple(sorted(set(labels)))
        self._index = {label: i for i, label in enumerate(self._labels)}

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self._labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelVocabulary):
            return NotImplemented
        return self._labels == other._labels

    def labels(self) -> tuple[str, ...]:
        return self._labels

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise IngestionError(f"label {label!r} not in vocabulary {self._labels}") from None

    def multi_hot(self, labels: Iterable[str]) -> np.ndarray:
        vec = np.zeros(len(self._labels), dtype=np.float64)
        for label in labels:
            vec[self.index(label)] = 1.0
        return vec


def document_from_json(obj: dict, where: str = "<doc>") -> Document:
    for key in ("id", "lang", "text"):
        if key not in obj:
            raise IngestionError(f"{where}: missing required field {key!r}")
    gold = obj.get("gold_entities")
    if gold is not None:
        for qid in gold:
            if not isinstance(qid, str) or not QID_PATTERN.match(qid):
                raise IngestionError(f"{where}: malformed QID {qid!r} in gold_entities")
    labels = obj.get("labels")
    return Document(
        id=str(obj["id"]),
        language=obj["lang"],
        text=obj["text"],
        labels=frozenset(labels) if labels is not None else None,
        encoder_vector=np.asarray(obj["vector"], dtype=np.float64) if "vector" in obj and obj["vector"] is not None else None,
        gold_entities=list(gold) if gold is not None else None,
    )


def document_to_json(doc: Document) -> dict:
    obj: dict = {"id": doc.id, "lang": doc.language, "text": doc.text}
    if doc.labels is not None:
        obj["labels"] = sorted(doc.labels)
    if doc.encoder_vector is not None:
        obj["vector"] = [float(x) for x in doc.encoder_vector]
    if doc.gold_entities is not None:
        obj["gold_entities"] = list(doc.gold_entities)
    return obj


def load_documents(path: str | Path, expect_dim: int | None = None) -> list[Document]:
    """Read a document JSONL file; validates structure line by line."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            doc = document_from_json(obj, where=f"{path}:{lineno}")
            if (
                expect_dim is not None
                and doc.encoder_vector is not None
                and doc.encoder_vector.shape != (expect_dim,)
            ):
                raise IngestionError(
                    f"{path}:{lineno}: vector has dimension "
                    f"{doc.encoder_vector.shape[0]}, expected {expect_dim}"
                )
            docs.append(doc)
    return docs


def save_documents(docs: Sequence[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_json(doc), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
