"""Attention-weighted bag-of-entities classifier.

Forward path for one document: per-entity features (cosine similarity
between the text vector and the entity embedding, and the commonness
prior), scalar attention logits through a weight vector (no bias),
softmax attention, a weighted average of entity embeddings as the
entity-based representation z, elementwise-sum fusion with the text
vector h, and a linear head producing class probabilities.

Ablations are expressed through the feature mask: dropping one feature
column, or dropping both ("none"), which makes the attention uniform and
reproduces the plain averaging model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .detection import BagOfEntities
from .embeddings import EntityEmbeddingStore
from .errors import ConfigurationError

MULTICLASS = "multiclass"
MULTILABEL = "multilabel"


class FeatureMask(str, Enum):
    BOTH = "both"
    COSINE_ONLY = "cosine_only"
    COMMONNESS_ONLY = "commonness_only"
    NONE = "none"

    @property
    def n_features(self) -> int:
        return {"both": 2, "cosine_only": 1, "commonness_only": 1, "none": 0}[self.value]

    @property
    def has_cosine(self) -> bool:
        return self in (FeatureMask.BOTH, FeatureMask.COSINE_ONLY)

    @property
    def has_commonness(self) -> bool:
        return self in (FeatureMask.BOTH, FeatureMask.COMMONNESS_ONLY)


def stable_softmax(logits: np.ndarray) -> np.ndarray:
    if logits.size == 0:
        return np.zeros(0, dtype=np.float64)
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / exp.sum()


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


@dataclass
class AttentionConfig:
    """Feature mask plus the attention weight vector (one weight per
    active feature, no bias)."""

    feature_mask: FeatureMask = FeatureMask.BOTH
    weights: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.feature_mask = FeatureMask(self.feature_mask)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.feature_mask.n_features,):
            raise ConfigurationError(
                f"attention weights shape {self.weights.shape} does not match "
                f"feature mask {self.feature_mask.value!r} "
                f"({self.feature_mask.n_features} features)"
            )


@dataclass
class ClassifierHead:
    """Linear head over the fused representation."""

    weights: np.ndarray  # (C, d)
    bias: np.ndarray  # (C,)
    mode: str = MULTICLASS
    threshold: float = 0.5

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.mode not in (MULTICLASS, MULTILABEL):
            raise ConfigurationError(f"unknown head mode {self.mode!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ConfigurationError(
                f"inconsistent head shapes {self.weights.shape} / {self.bias.shape}"
            )

    @property
    def n_labels(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class ForwardTrace:
    """Intermediate values of one forward pass (consumed by the gradient
    code and by attribution)."""

    v: np.ndarray  # (K, d) effective entity embeddings
    commonness: np.ndarray  # (K,)
    cos: np.ndarray | None  # (K,) cosine features, None when inactive
    v_norms: np.ndarray  # (K,)
    h_norm: float
    phi: np.ndarray  # (K, F)
    attention: np.ndarray  # (K,)
    z: np.ndarray  # (d,)
    fused: np.ndarray  # (d,)
    logits: np.ndarray  # (C,)
    probs: np.ndarray  # (C,)


class BoEModel:
    """Text vector + bag of entities -> label probabilities.

    Fusion is a fixed elementwise sum, so an empty bag (z = 0) degrades
    exactly to a linear classifier on the text vector alone.
    """

    def __init__(
        self,
        attention: AttentionConfig,
        head: ClassifierHead,
        store: EntityEmbeddingStore,
        labels: tuple[str, ...] | None = None,
    ):
        if head.dim != store.dim:
            raise ConfigurationError(
                f"head dimension {head.dim} does not match store dimension {store.dim}"
            )
        if labels is not None and len(labels) != head.n_labels:
            raise ConfigurationError(
                f"{len(labels)} label names for a head with {head.n_labels} outputs"
            )
        self.attention = attention
        self.head = head
        self.store = store
        self.labels = labels

    @classmethod
    def create(
        cls,
        store: EntityEmbeddingStore,
        n_labels: int,
        *,
        feature_mask: FeatureMask | str = FeatureMask.BOTH,
        mode: str = MULTICLASS,
        threshold: float = 0.5,
        labels: tuple[str, ...] | None = None,
    ) -> "BoEModel":
        """Zero-initialized model (uniform attention, uniform predictions)."""
        mask = FeatureMask(feature_mask)
        attention = AttentionConfig(mask, np.zeros(mask.n_features))
        head = ClassifierHead(
            weights=np.zeros((n_labels, store.dim)),
            bias=np.zeros(n_labels),
            mode=mode,
            threshold=threshold,
        )
        return cls(attention, head, store, labels=labels)

    @property
    def dim(self) -> int:
        return self.head.dim

    def features(self, h: np.ndarray, bag: BagOfEntities) -> np.ndarray:
        """K x F feature matrix; column order is [cosine, commonness]."""
        return self._features(h, bag)[0]

    def _features(self, h, bag):
        mask = self.attention.feature_mask
        k = len(bag)
        v = np.stack([self.store.get(item.qid) for item in bag.items]) if k else np.zeros((0, self.dim))
        commonness = np.array([item.commonness for item in bag.items], dtype=np.float64)
        v_norms = np.linalg.norm(v, axis=1) if k else np.zeros(0)
        h_norm = float(np.linalg.norm(h))
        cos = None
        columns = []
        if mask.has_cosine:
            if k:
                denom = v_norms * h_norm
                safe = denom > 0.0
                cos = np.zeros(k, dtype=np.float64)
                cos[safe] = (v[safe] @ h) / denom[safe]
            else:
                cos = np.zeros(0, dtype=np.float64)
            columns.append(cos)
        if mask.has_commonness:
            columns.append(commonness)
        phi = np.column_stack(columns) if columns else np.zeros((k, 0), dtype=np.float64)
        return phi, v, commonness, cos, v_norms, h_norm

    def attention_weights(self, phi: np.ndarray) -> np.ndarray:
        """Softmax over the per-entity attention logits; empty in, empty out.

        With a zero weight vector (or no active features) the logits are
        all zero, so the weights are exactly uniform.
        """
        k = phi.shape[0]
        if k == 0:
            return np.zeros(0, dtype=np.float64)
        logits = phi @ self.attention.weights
        return stable_softmax(logits)

    def entity_representation(self, bag: BagOfEntities, attention: np.ndarray) -> np.ndarray:
        """Weighted average of entity embeddings; zero vector when the bag
        is empty."""
        if len(bag) != attention.shape[0]:
            raise ValueError(f"bag has {len(bag)} items but got {attention.shape[0]} weights")
        if len(bag) == 0:
            return np.zeros(self.dim, dtype=np.float64)
        v = np.stack([self.store.get(item.qid) for item in bag.items])
        return attention @ v

    def forward(self, h: np.ndarray, bag: BagOfEntities) -> np.ndarray:
        """Class probability vector for one document."""
        return self.forward_trace(h, bag).probs

    def forward_trace(self, h: np.ndarray, bag: BagOfEntities) -> ForwardTrace:
        h = np.asarray(h, dtype=np.float64)
        if h.shape != (self.dim,):
            raise ConfigurationError(f"text vector has shape {h.shape}, expected ({self.dim},)")
        phi, v, commonness, cos, v_norms, h_norm = self._features(h, bag)
        attention = self.attention_weights(phi)
        z = attention @ v if len(bag) else np.zeros(self.dim, dtype=np.float64)
        fused = h + z
        logits = self.head.weights @ fused + self.head.bias
        if self.head.mode == MULTICLASS:
            probs = stable_softmax(logits)
        else:
            probs = sigmoid(logits)
        return ForwardTrace(
            v=v,
            commonness=commonness,
            cos=cos,
            v_norms=v_norms,
            h_norm=h_norm,
            phi=phi,
            attention=attention,
            z=z,
            fused=fused,
            logits=logits,
            probs=probs,
        )

    def predict(self, probs: np.ndarray) -> Union[int, frozenset[int]]:
        """Argmax label (ties -> lowest index) or the set of labels with
        probability strictly greater than the threshold."""
        if self.head.mode == MULTICLASS:
            return int(np.argmax(probs))
        return frozenset(int(i) for i in np.nonzero(probs > self.head.threshold)[0])
