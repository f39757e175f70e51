"""Cross-lingual evaluation harness: pipeline runs, multi-seed reports
with confidence intervals, ablations, detection-rate sweeps, and
attention-based attribution.

A pipeline run is the whole chain for one seed: build the embedding
store, detect (or take gold) bags, optionally subsample them, encode
text vectors, train on the source language, and score every target
language.  Reports aggregate per-language scores across seeds; ablation
variants share one seed set so comparisons are paired.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Document, LabelVocabulary
from .detection import BagOfEntities, Detector, from_gold, subsample, subsample_seed
from .dictionary import InterLanguageMap, MentionEntityDictionary
from .embeddings import EntityEmbeddingStore, load_embeddings
from .errors import ConfigurationError
from .metrics import accuracy, mean_ci, micro_f1
from .model import MULTICLASS, BoEModel, FeatureMask
from .trainer import (
    Example,
    HashingEncoder,
    TrainConfig,
    TrainingHistory,
    prepare_example,
    train,
)

@dataclass
class PipelineData:
    """Corpora and knowledge-base resources for one task."""

    source_language: str
    train_docs: list[Document]
    val_docs: list[Document]
    test_docs: dict[str, list[Document]]  # language -> documents
    dictionaries: dict[str, MentionEntityDictionary]
    ilmap: InterLanguageMap
    label_vocab: LabelVocabulary


@dataclass
class PipelineOptions:
    """Everything that defines a model variant, independent of the seed."""

    dim: int
    mode: str = MULTICLASS
    feature_mask: FeatureMask = FeatureMask.BOTH
    keep_rate: float = 1.0
    use_gold: bool = False
    boundary_mode: bool = False
    max_entities: int | None = None
    embeddings_path: str | None = None
    random_embeddings: bool = False  # ignore the embedding file, fallback-init everything
    init_scale: float = 0.02
    embedding_init_seed: int = 0
    encoder_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)

    def fingerprint(self) -> str:
        blob = asdict(self)
        blob["feature_mask"] = FeatureMask(self.feature_mask).value
        return hashlib.sha256(
            json.dumps(blob, sort_keys=True, default=str).encode()
        ).hexdigest()


@dataclass
class PipelineRun:
    model: BoEModel
    scores: dict[str, float]
    target_avg: float
    history: TrainingHistory


def _build_store(options: PipelineOptions) -> EntityEmbeddingStore:
    if options.embeddings_path is not None and not options.random_embeddings:
        return load_embeddings(
            options.embeddings_path,
            options.dim,
            init_seed=options.embedding_init_seed,
            init_scale=options.init_scale,
        )
    return EntityEmbeddingStore(
        options.dim,
        init_seed=options.embedding_init_seed,
        init_scale=options.init_scale,
    )


def build_examples(
    docs: Sequence[Document],
    data: PipelineData,
    options: PipelineOptions,
    seed: int,
    *,
    detectors: Mapping[str, Detector],
    encoder: HashingEncoder,
) -> list[Example]:
    """Bags + text vectors + targets for a document list (order preserved)."""
    examples = []
    for doc in docs:
        if options.use_gold:
            bag = from_gold(doc)
        else:
            detector = detectors.get(doc.language)
            if detector is None:
                raise ConfigurationError(
                    f"no dictionary for language {doc.language!r} (document {doc.id!r})"
                )
            bag = detector.detect(doc)
        if options.keep_rate < 1.0:
            bag = subsample(bag, options.keep_rate, subsample_seed(seed, doc.id))
        examples.append(
            prepare_example(
                doc, bag, data.label_vocab, options.mode, encoder=encoder, dim=options.dim
            )
        )
    return examples


def evaluate_examples(model: BoEModel, examples: Sequence[Example]) -> float:
    """Accuracy (multiclass) or micro-F1 (multilabel) on prepared examples."""
    if not examples:
        raise ValueError("no examples to evaluate")
    preds = [model.predict(model.forward(ex.h, ex.bag)) for ex in examples]
    if model.head.mode == MULTICLASS:
        return accuracy(preds, [ex.target for ex in examples])
    golds = [frozenset(int(i) for i in np.nonzero(ex.target)[0]) for ex in examples]
    return micro_f1(preds, golds)


def zero_shot_scores(
    scores: Mapping[str, float], source_language: str
) -> tuple[dict[str, float], float]:
    """Per-language scores plus the mean over non-source (target) languages."""
    targets = [s for lang, s in scores.items() if lang != source_language]
    if not targets:
        raise ValueError("no target languages")
    return dict(scores), float(np.mean(targets))


def run_pipeline(data: PipelineData, options: PipelineOptions, seed: int) -> PipelineRun:
    """Train on the source language with one seed and score all languages."""
    store = _build_store(options)
    vocab = data.label_vocab
    model = BoEModel.create(
        store,
        len(vocab),
        feature_mask=options.feature_mask,
        mode=options.mode,
        labels=vocab.labels(),
    )
    detectors: dict[str, Detector] = {}
    if not options.use_gold:
        needed = {data.source_language} | set(data.test_docs)
        for lang in sorted(needed):
            dictionary = data.dictionaries.get(lang)
            if dictionary is None:
                raise ConfigurationError(f"no dictionary for language {lang!r}")
            detectors[lang] = Detector(
                dictionary,
                data.ilmap,
                boundary_mode=options.boundary_mode,
                max_entities=options.max_entities,
            )
    encoder = HashingEncoder(options.dim, seed=options.encoder_seed)
    kwargs = dict(detectors=detectors, encoder=encoder)
    train_examples = build_examples(data.train_docs, data, options, seed, **kwargs)
    val_examples = build_examples(data.val_docs, data, options, seed, **kwargs)
    config = replace(options.train, seed=seed, loss_mode=options.mode)
    history = train(model, train_examples, val_examples, config)
    scores = {}
    for lang in sorted(data.test_docs):
        test_examples = build_examples(data.test_docs[lang], data, options, seed, **kwargs)
        scores[lang] = evaluate_examples(model, test_examples)
    scores, target_avg = zero_shot_scores(scores, data.source_language)
    return PipelineRun(model=model, scores=scores, target_avg=target_avg, history=history)


@dataclass
class EvalReport:
    """Per-language metric values across seeds, with means and 95% CIs."""

    metric: str
    source_language: str
    seeds: tuple[int, ...]
    per_language: dict[str, list[float]]
    target_avg: list[float]
    config_fingerprint: str

    def language_summary(self, language: str) -> tuple[float, float | None]:
        return mean_ci(self.per_language[language])

    def target_summary(self) -> tuple[float, float | None]:
        return mean_ci(self.target_avg)

    def seed_fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(list(self.seeds)).encode()).hexdigest()

    def to_json(self) -> dict:
        langs = {}
        for lang in sorted(self.per_language):
            mean, ci = self.language_summary(lang)
            langs[lang] = {"values": self.per_language[lang], "mean": mean, "ci95": ci}
        t_mean, t_ci = self.target_summary()
        return {
            "metric": self.metric,
            "source_language": self.source_language,
            "seeds": list(self.seeds),
            "languages": langs,
            "target_avg": {"values": self.target_avg, "mean": t_mean, "ci95": t_ci},
            "config_fingerprint": self.config_fingerprint,
        }

    def to_text(self) -> str:
        rows = [("language", "mean", "ci95")]
        for lang in sorted(self.per_language):
            mean, ci = self.language_summary(lang)
            rows.append((lang, f"{mean:.4f}", f"{ci:.4f}" if ci is not None else "-"))
        t_mean, t_ci = self.target_summary()
        rows.append(("target avg.", f"{t_mean:.4f}", f"{t_ci:.4f}" if t_ci is not None else "-"))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
        return "\n".join(lines)


def multi_seed_eval(
    data: PipelineData, options: PipelineOptions, seeds: Sequence[int]
) -> EvalReport:
    """Run the pipeline once per seed and aggregate."""
    if not seeds:
        raise ValueError("need at least one seed")
    per_language: dict[str, list[float]] = {}
    target_avg: list[float] = []
    for seed in seeds:
        run = run_pipeline(data, options, seed)
        for lang, score in run.scores.items():
            per_language.setdefault(lang, []).append(score)
        target_avg.append(run.target_avg)
    metric = "accuracy" if options.mode == MULTICLASS else "micro_f1"
    return EvalReport(
        metric=metric,
        source_language=data.source_language,
        seeds=tuple(seeds),
        per_language=per_language,
        target_avg=target_avg,
        config_fingerprint=options.fingerprint(),
    )


ABLATION_VARIANTS = {
    "without_attention": {"feature_mask": FeatureMask.NONE},
    "commonness_only": {"feature_mask": FeatureMask.COMMONNESS_ONLY},
    "cosine_only": {"feature_mask": FeatureMask.COSINE_ONLY},
    "random_vectors": {"random_embeddings": True},
    "gold_bags": {"use_gold": True},
}


def ablation_run(
    data: PipelineData,
    base_options: PipelineOptions,
    variants: Sequence[str],
    seeds: Sequence[int],
) -> dict[str, EvalReport]:
    """Full model plus the requested variants, all on the same seed set."""
    for name in variants:
        if name not in ABLATION_VARIANTS:
            raise ConfigurationError(
                f"unknown ablation variant {name!r}; choose from {sorted(ABLATION_VARIANTS)}"
            )
    reports = {"full": multi_seed_eval(data, base_options, seeds)}
    for name in variants:
        options = replace(base_options, **ABLATION_VARIANTS[name])
        reports[name] = multi_seed_eval(data, options, seeds)
    return reports


@dataclass
class SweepPoint:
    rate: float
    mean: float
    ci95: float | None
    values: list[float]


def detection_rate_sweep(
    data: PipelineData,
    options: PipelineOptions,
    rates: Sequence[float],
    seeds: Sequence[int],
) -> list[SweepPoint]:
    """Target-average metric as a function of the entity keep rate, which
    applies during both training and inference."""
    points = []
    for rate in rates:
        if not 0.0 <= rate <= 1.0:
            raise ConfigurationError(f"rate {rate} outside [0, 1]")
        report = multi_seed_eval(data, replace(options, keep_rate=rate), seeds)
        mean, ci = report.target_summary()
        points.append(SweepPoint(rate=rate, mean=mean, ci95=ci, values=report.target_avg))
    return points


def write_sweep_csv(points: Sequence[SweepPoint], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rate", "mean", "ci"])
        for p in points:
            writer.writerow([p.rate, repr(p.mean), repr(p.ci95) if p.ci95 is not None else ""])


def top_entities(
    model: BoEModel, h: np.ndarray, bag: BagOfEntities, k: int
) -> list[tuple[str, float]]:
    """The k most influential entities by attention mass.

    Attention of repeated detections of the same QID is summed; ties are
    broken by QID lexical order.  Empty bag yields an empty list.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(bag) == 0:
        return []
    trace = model.forward_trace(np.asarray(h, dtype=np.float64), bag)
    mass: dict[str, float] = {}
    for item, weight in zip(bag.items, trace.attention):
        mass[item.qid] = mass.get(item.qid, 0.0) + float(weight)
    ranked = sorted(mass.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]
