"""Constructed two-language corpora for mechanism tests.

Documents are token sequences in an artificial source or target
language.  Each document embeds mentions of entities drawn mostly from
one topic pool; the label is that majority topic.  Entity QIDs are
shared across the two languages while every surface token is
language-specific, so only the entity pathway can carry label
information across languages (the hashing text encoder is additionally
salted per language).

The noisy variant stresses the attention mechanism: every document also
embeds unambiguous distractor mentions drawn uniformly (independently of
the label) from a junk-entity pool, detected with commonness 1.0, while
informative mentions become ambiguous between two same-topic entities,
detected with commonness 0.5 each.  With distractor counts equal to the
informative item count, half of each bag is label-uninformative noise
that uniform averaging cannot escape but commonness-aware attention can
suppress.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import PipelineData
from .corpus import Document, LabelVocabulary
from .dictionary import (
    InterLanguageMap,
    MentionEntityDictionary,
    build_interlanguage_map,
    build_mention_dictionary,
)

SOURCE = "aa"
TARGET = "bb"


@dataclass(frozen=True)
class SyntheticSpec:
    n_labels: int = 4
    entities_per_topic: int = 20
    majority_entities: int = 5  # per document, from the label topic
    minority_entities: int = 2  # per document, from other topics
    ambiguous_mentions: bool = False  # informative mentions propose 2 same-topic entities
    junk_per_doc: int = 0  # distractor mentions per document
    junk_pool: int = 60  # distinct distractor entities
    n_train: int = 500
    n_val: int = 100
    n_test: int = 500
    fillers_per_doc: int = 4
    filler_vocabulary: int = 30
    seed: int = 0

    def topic_qid(self, topic: int, index: int) -> str:
        return f"Q{10000 + topic * self.entities_per_topic + index}"

    def junk_qid(self, index: int) -> str:
        return f"Q{90000 + index}"


def _mention_token(language: str, topic: int, index: int) -> str:
    # fixed-width tokens so no mention nests inside another
    return f"{language}m{topic:01d}{index:03d}"


def _junk_token(language: str, index: int) -> str:
    return f"{language}j{index:04d}"


def _title(language: str, topic: int, index: int) -> str:
    return f"Entity {language} {topic}-{index}"


def _junk_title(language: str, index: int) -> str:
    return f"Junk {language} {index}"


def build_resources(
    spec: SyntheticSpec,
) -> tuple[dict[str, MentionEntityDictionary], InterLanguageMap]:
    """Per-language mention dictionaries and the shared QID map."""
    sitelinks = []
    dictionaries = {}
    for language in (SOURCE, TARGET):
        anchors = []
        for topic in range(spec.n_labels):
            for index in range(spec.entities_per_topic):
                mention = _mention_token(language, topic, index)
                title = _title(language, topic, index)
                sitelinks.append((language, title, spec.topic_qid(topic, index)))
                anchors.append((mention, title, 1))
                if spec.ambiguous_mentions:
                    # second candidate from the same topic: detection yields
                    # two commonness-0.5 items that both carry the label signal
                    sibling = _title(language, topic, (index + 1) % spec.entities_per_topic)
                    anchors.append((mention, sibling, 1))
        for junk in range(spec.junk_pool):
            sitelinks.append((language, _junk_title(language, junk), spec.junk_qid(junk)))
            anchors.append((_junk_token(language, junk), _junk_title(language, junk), 1))
        dictionaries[language] = build_mention_dictionary(anchors, language)
    return dictionaries, build_interlanguage_map(sitelinks)


def _make_documents(
    spec: SyntheticSpec, language: str, count: int, split: str, rng: np.random.Generator
) -> list[Document]:
    docs = []
    for i in range(count):
        label = i % spec.n_labels  # exactly balanced
        majority = rng.choice(spec.entities_per_topic, size=spec.majority_entities, replace=False)
        tokens = [_mention_token(language, label, int(j)) for j in majority]
        gold = [spec.topic_qid(label, int(j)) for j in majority]
        for _ in range(spec.minority_entities):
            other = int(rng.integers(spec.n_labels - 1))
            other = other if other < label else other + 1
            j = int(rng.integers(spec.entities_per_topic))
            tokens.append(_mention_token(language, other, j))
            gold.append(spec.topic_qid(other, j))
        if spec.junk_per_doc:
            junks = rng.choice(spec.junk_pool, size=spec.junk_per_doc, replace=False)
            tokens.extend(_junk_token(language, int(j)) for j in junks)
        for _ in range(spec.fillers_per_doc):
            tokens.append(f"{language}f{int(rng.integers(spec.filler_vocabulary)):04d}")
        rng.shuffle(tokens)
        docs.append(
            Document(
                id=f"{split}-{language}-{i}",
                language=language,
                text=" ".join(tokens),
                labels=frozenset({f"topic{label}"}),
                gold_entities=gold,
            )
        )
    return docs


def build_synthetic_task(spec: SyntheticSpec) -> PipelineData:
    """Source-language train/val corpora and a target-language test corpus."""
    dictionaries, ilmap = build_resources(spec)
    rng = np.random.default_rng(spec.seed)
    train_docs = _make_documents(spec, SOURCE, spec.n_train, "train", rng)
    val_docs = _make_documents(spec, SOURCE, spec.n_val, "val", rng)
    test_docs = {TARGET: _make_documents(spec, TARGET, spec.n_test, "test", rng)}
    vocab = LabelVocabulary(f"topic{t}" for t in range(spec.n_labels))
    return PipelineData(
        source_language=SOURCE,
        train_docs=train_docs,
        val_docs=val_docs,
        test_docs=test_docs,
        dictionaries=dictionaries,
        ilmap=ilmap,
        label_vocab=vocab,
    )


def noisy_spec(seed: int = 0, **overrides) -> SyntheticSpec:
    """Preset for the distractor stress test: half of every bag is junk."""
    majority = overrides.pop("majority_entities", 4)
    minority = overrides.pop("minority_entities", 1)
    defaults = dict(
        n_labels=4,
        majority_entities=majority,
        minority_entities=minority,
        ambiguous_mentions=True,
        junk_per_doc=2 * (majority + minority),
        n_train=300,
        n_val=80,
        n_test=300,
        seed=seed,
    )
    defaults.update(overrides)
    return SyntheticSpec(**defaults)
