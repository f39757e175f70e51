"""Multilingual bag-of-entities document representations.

Dictionary-based detection of knowledge-base entities in text, an
attention-weighted entity document representation fused with a text
encoder vector, and a trainable linear classifier, with an evaluation
harness for zero-shot cross-lingual classification experiments.
"""

__version__ = "0.1.0"

from .corpus import Document, LabelVocabulary, load_documents, save_documents
from .detection import (
    BagOfEntities,
    DetectedEntity,
    Detector,
    detect,
    detection_stats,
    from_gold,
    subsample,
)
from .dictionary import (
    InterLanguageMap,
    MentionEntityDictionary,
    build_interlanguage_map,
    build_mention_dictionary,
    load_dictionary,
    load_interlanguage_map,
    load_mention_dictionary,
)
from .embeddings import EntityEmbeddingStore, cosine, load_embeddings
from .model import (
    MULTICLASS,
    MULTILABEL,
    AttentionConfig,
    BoEModel,
    ClassifierHead,
    FeatureMask,
)
from .scanner import COMPILED_KERNEL, kernel_name
from .trainer import (
    Example,
    HashingEncoder,
    TrainConfig,
    gradients,
    load_model,
    loss,
    prepare_example,
    save_model,
    train,
)

__all__ = [
    "AttentionConfig",
    "BagOfEntities",
    "BoEModel",
    "COMPILED_KERNEL",
    "ClassifierHead",
    "DetectedEntity",
    "Detector",
    "Document",
    "EntityEmbeddingStore",
    "Example",
    "FeatureMask",
    "HashingEncoder",
    "InterLanguageMap",
    "LabelVocabulary",
    "MULTICLASS",
    "MULTILABEL",
    "MentionEntityDictionary",
    "TrainConfig",
    "build_interlanguage_map",
    "build_mention_dictionary",
    "cosine",
    "detect",
    "detection_stats",
    "from_gold",
    "gradients",
    "kernel_name",
    "load_dictionary",
    "load_documents",
    "load_embeddings",
    "load_interlanguage_map",
    "load_mention_dictionary",
    "load_model",
    "loss",
    "prepare_example",
    "save_documents",
    "save_model",
    "subsample",
    "train",
]
