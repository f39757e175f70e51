"""Training: losses, analytic gradients, AdamW with global-norm clipping,
and a seeded convergence-based loop.

Gradients are hand-derived through the whole forward path: the linear
head, the sum fusion, the attention softmax Jacobian, and (when entity
embeddings are trainable) both routes into an embedding: its share of
the weighted average and its appearance inside the cosine feature.
The text vector h is an input, never a parameter; the external encoder
stays frozen by design.

Also provides the built-in hashing text encoder used for desk-scale
end-to-end runs: hashed character n-gram counts, salted per language so
surface-text features deliberately do not transfer across languages.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _binio
from .corpus import Document, LabelVocabulary
from .detection import BagOfEntities
from .embeddings import EntityEmbeddingStore
from .errors import ConfigurationError, FormatError
from .model import (
    MULTICLASS,
    MULTILABEL,
    AttentionConfig,
    BoEModel,
    ClassifierHead,
    FeatureMask,
    sigmoid,
)

logger = logging.getLogger(__name__)

_PROB_FLOOR = 1e-12


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    clip_norm: float = 1.0
    seed: int = 0
    max_epochs: int = 100
    patience: int = 5
    embeddings_trainable: bool = True
    loss_mode: str = MULTICLASS
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be nonnegative")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be at least 1")
        if self.clip_norm <= 0:
            raise ConfigurationError("clip_norm must be positive")
        if self.patience < 1:
            raise ConfigurationError("patience must be at least 1")
        if self.max_epochs < 0:
            raise ConfigurationError("max_epochs must be nonnegative")
        if self.loss_mode not in (MULTICLASS, MULTILABEL):
            raise ConfigurationError(f"unknown loss mode {self.loss_mode!r}")


@dataclass
class Example:
    """One prepared training/eval instance: text vector, bag, target.

    target is a label index (multiclass) or a multi-hot vector
    (multilabel).
    """

    doc_id: str
    h: np.ndarray
    bag: BagOfEntities
    target: int | np.ndarray


@dataclass(frozen=True)
class HashingEncoder:
    """Deterministic stand-in text encoder.

    L2-normalized hashed character n-gram counts.  The hash is keyed by
    (seed, language), so identical strings in different languages land in
    different dimensions; cross-lingual transfer through these text
    features is impossible by construction, isolating the entity pathway.
    """

    dim: int
    seed: int = 0
    ngram_min: int = 3
    ngram_max: int = 5

    def encode(self, text: str, language: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        key = f"{self.seed}:{language}".encode("utf-8")[:64]
        for n in range(self.ngram_min, self.ngram_max + 1):
            if len(text) < n:
                break
            for i in range(len(text) - n + 1):
                gram = text[i : i + n].encode("utf-8")
                digest = hashlib.blake2b(gram, digest_size=8, key=key).digest()
                value = int.from_bytes(digest, "little")
                sign = 1.0 if value & 1 else -1.0
                vec[(value >> 1) % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


def prepare_example(
    doc: Document,
    bag: BagOfEntities,
    vocab: LabelVocabulary,
    mode: str,
    *,
    encoder: HashingEncoder | None = None,
    dim: int | None = None,
) -> Example:
    """Pair a document with its bag and resolve the text vector and target.

    Precomputed vectors win over the encoder; every failure names the
    document it belongs to.
    """
    if doc.encoder_vector is not None:
        h = doc.encoder_vector
        if dim is not None and h.shape != (dim,):
            raise ConfigurationError(
                f"document {doc.id!r}: vector dimension {h.shape[0]} != expected {dim}"
            )
    elif encoder is not None:
        h = encoder.encode(doc.text, doc.language)
    else:
        raise ConfigurationError(
            f"document {doc.id!r} has no encoder vector and no encoder was provided"
        )
    if doc.labels is None:
        raise ConfigurationError(f"document {doc.id!r} has no labels")
    if mode == MULTICLASS:
        if len(doc.labels) != 1:
            raise ConfigurationError(
                f"document {doc.id!r} has {len(doc.labels)} labels; multiclass needs exactly 1"
            )
        target: int | np.ndarray = vocab.index(next(iter(doc.labels)))
    else:
        target = vocab.multi_hot(doc.labels)
    return Example(doc_id=doc.id, h=np.asarray(h, dtype=np.float64), bag=bag, target=target)


def loss(probs: np.ndarray, gold: int | Iterable[int] | np.ndarray, mode: str) -> float:
    """Loss of one prediction from its probability vector.

    Multiclass: negative log probability of the gold class.  Multilabel:
    mean binary cross-entropy over all labels.  Probabilities are clamped
    to [1e-12, 1 - 1e-12] here and only here.
    """
    probs = np.clip(np.asarray(probs, dtype=np.float64), _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    n = probs.shape[0]
    if mode == MULTICLASS:
        gold = int(gold)  # type: ignore[arg-type]
        if not 0 <= gold < n:
            raise ValueError(f"gold label {gold} outside vocabulary of size {n}")
        return float(-np.log(probs[gold]))
    if mode == MULTILABEL:
        if isinstance(gold, np.ndarray) and gold.shape == probs.shape:
            y = gold.astype(np.float64)
        else:
            y = np.zeros(n, dtype=np.float64)
            for idx in gold:  # type: ignore[union-attr]
                if not 0 <= int(idx) < n:
                    raise ValueError(f"gold label {idx} outside vocabulary of size {n}")
                y[int(idx)] = 1.0
        terms = -(y * np.log(probs) + (1.0 - y) * np.log(1.0 - probs))
        return float(terms.mean())
    raise ValueError(f"unknown loss mode {mode!r}")


def _loss_and_dlogits(logits: np.ndarray, target, mode: str) -> tuple[float, np.ndarray]:
    # numerically stable forms; gradients are exact for these expressions
    if mode == MULTICLASS:
        y = int(target)
        m = float(np.max(logits))
        lse = m + float(np.log(np.sum(np.exp(logits - m))))
        p = np.exp(logits - lse)
        dlogits = p.copy()
        dlogits[y] -= 1.0
        return lse - float(logits[y]), dlogits
    y = np.asarray(target, dtype=np.float64)
    per_label = np.logaddexp(0.0, logits) - y * logits
    dlogits = (sigmoid(logits) - y) / logits.shape[0]
    return float(per_label.mean()), dlogits


@dataclass
class Gradients:
    """Mean-batch gradients for every trainable tensor; deltas is None
    when embeddings are frozen, and holds only QIDs present in the batch
    otherwise."""

    attention: np.ndarray
    head_weights: np.ndarray
    head_bias: np.ndarray
    deltas: dict[str, np.ndarray] | None = None

    def tensors(self) -> Iterable[tuple[str, np.ndarray]]:
        yield "attention", self.attention
        yield "head_weights", self.head_weights
        yield "head_bias", self.head_bias
        if self.deltas is not None:
            for qid in sorted(self.deltas):
                yield f"delta:{qid}", self.deltas[qid]

    def global_norm(self) -> float:
        total = 0.0
        for _, g in self.tensors():
            total += float(np.sum(g * g))
        return float(np.sqrt(total))

    def scale(self, factor: float) -> None:
        self.attention *= factor
        self.head_weights *= factor
        self.head_bias *= factor
        if self.deltas is not None:
            for g in self.deltas.values():
                g *= factor


def example_loss(model: BoEModel, example: Example) -> float:
    trace = model.forward_trace(example.h, example.bag)
    value, _ = _loss_and_dlogits(trace.logits, example.target, model.head.mode)
    return value


def gradients(
    model: BoEModel,
    batch: Sequence[Example],
    embeddings_trainable: bool = True,
) -> tuple[Gradients, float]:
    """Analytic gradients of the mean batch loss; also returns that loss."""
    if not batch:
        raise ValueError("empty batch")
    mask = model.attention.feature_mask
    w_a = model.attention.weights
    grads = Gradients(
        attention=np.zeros_like(w_a),
        head_weights=np.zeros_like(model.head.weights),
        head_bias=np.zeros_like(model.head.bias),
        deltas={} if embeddings_trainable else None,
    )
    total_loss = 0.0
    for example in batch:
        trace = model.forward_trace(example.h, example.bag)
        value, dlogits = _loss_and_dlogits(trace.logits, example.target, model.head.mode)
        total_loss += value
        grads.head_weights += np.outer(dlogits, trace.fused)
        grads.head_bias += dlogits
        dz = model.head.weights.T @ dlogits
        k = len(example.bag)
        if k == 0:
            continue
        a = trace.attention
        ds = None
        if mask.n_features > 0:
            da = trace.v @ dz
            ds = a * (da - float(a @ da))
            grads.attention += trace.phi.T @ ds
        if not embeddings_trainable:
            continue
        # weighted-average route
        dv = a[:, None] * dz[None, :]
        # cosine-feature route (commonness is a constant input)
        if mask.has_cosine and ds is not None and trace.h_norm > 0.0:
            dcos = ds * w_a[0]
            h_unit = example.h / trace.h_norm
            for i in range(k):
                vn = trace.v_norms[i]
                if vn > 0.0 and dcos[i] != 0.0:
                    dv[i] += dcos[i] * (h_unit / vn - trace.cos[i] * trace.v[i] / (vn * vn))
        for i, item in enumerate(example.bag.items):
            acc = grads.deltas.get(item.qid)
            if acc is None:
                grads.deltas[item.qid] = dv[i].copy()
            else:
                acc += dv[i]
    scale = 1.0 / len(batch)
    grads.scale(scale)
    return grads, total_loss * scale


def clip_gradients(grads: Gradients, clip_norm: float) -> float:
    """Scale gradients so the global norm is at most clip_norm; returns
    the pre-clip norm."""
    norm = grads.global_norm()
    if norm > clip_norm:
        grads.scale(clip_norm / norm)
    return norm


class AdamW:
    """Decoupled-weight-decay Adam over named numpy tensors.

    State (first/second moments and step count) is kept per tensor name,
    so sparsely-touched embedding deltas advance only on the steps that
    actually produce a gradient for them.  Weight decay applies to the
    attention and head weight matrices only, never to the bias or the
    embedding deltas.
    """

    DECAYED = ("attention", "head_weights")

    def __init__(
        self,
        learning_rate: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.learning_rate = learning_rate
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._state: dict[str, dict] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        beta1, beta2 = self.betas
        for name, grad in grads.items():
            param = params[name]
            state = self._state.get(name)
            if state is None:
                state = {"step": 0, "m": np.zeros_like(param), "v": np.zeros_like(param)}
                self._state[name] = state
            state["step"] += 1
            m, v = state["m"], state["v"]
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad
            t = state["step"]
            m_hat = m / (1.0 - beta1**t)
            v_hat = v / (1.0 - beta2**t)
            if self.weight_decay and name in self.DECAYED:
                param *= 1.0 - self.learning_rate * self.weight_decay
            param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_metric: float | None


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    best_metric: float | None = None
    stopped_early: bool = False


def _val_metric(model: BoEModel, examples: Sequence[Example]) -> float:
    from .metrics import accuracy, micro_f1

    preds = [model.predict(model.forward(ex.h, ex.bag)) for ex in examples]
    if model.head.mode == MULTICLASS:
        return accuracy(preds, [ex.target for ex in examples])
    golds = [frozenset(int(i) for i in np.nonzero(ex.target)[0]) for ex in examples]
    return micro_f1(preds, golds)


def _snapshot(model: BoEModel) -> tuple:
    deltas = {qid: vec.copy() for qid, vec in model.store.deltas()}
    return (
        model.attention.weights.copy(),
        model.head.weights.copy(),
        model.head.bias.copy(),
        deltas,
    )


def _restore(model: BoEModel, snap: tuple) -> None:
    model.attention.weights = snap[0].copy()
    model.head.weights = snap[1].copy()
    model.head.bias = snap[2].copy()
    model.store.clear_deltas()
    for qid, vec in snap[3].items():
        model.store.set_delta(qid, vec)


def train(
    model: BoEModel,
    train_examples: Sequence[Example],
    val_examples: Sequence[Example],
    config: TrainConfig,
) -> TrainingHistory:
    """Seeded AdamW loop with global-norm clipping and early stopping.

    Shuffles every epoch with the config seed, keeps the last partial
    batch, evaluates on the validation set after each epoch, stops after
    `patience` evaluations without improvement, and restores the best
    parameters.  Fully reproducible: same data, config, and seed give
    bit-identical parameters.
    """
    if not train_examples:
        raise ValueError("empty training set")
    if config.loss_mode != model.head.mode:
        raise ConfigurationError(
            f"loss mode {config.loss_mode!r} does not match head mode {model.head.mode!r}"
        )
    optimizer = AdamW(
        config.learning_rate,
        betas=config.betas,
        eps=config.eps,
        weight_decay=config.weight_decay,
    )
    rng = np.random.default_rng(config.seed)
    history = TrainingHistory()
    best_snap = _snapshot(model)
    best_metric = -np.inf
    best_epoch = None
    stale = 0
    n = len(train_examples)
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, n, config.batch_size):
            batch = [train_examples[i] for i in order[lo : lo + config.batch_size]]
            grads, batch_loss = gradients(model, batch, config.embeddings_trainable)
            clip_gradients(grads, config.clip_norm)
            params: dict[str, np.ndarray] = {
                "attention": model.attention.weights,
                "head_weights": model.head.weights,
                "head_bias": model.head.bias,
            }
            grad_map: dict[str, np.ndarray] = {}
            for name, g in grads.tensors():
                if name.startswith("delta:"):
                    qid = name[len("delta:") :]
                    current = model.store.delta(qid)
                    param = current.copy() if current is not None else np.zeros(model.dim)
                    params[name] = param
                grad_map[name] = g
            optimizer.step(params, grad_map)
            for name, param in params.items():
                if name.startswith("delta:"):
                    model.store.set_delta(name[len("delta:") :], param)
            epoch_loss += batch_loss
            n_batches += 1
        val = _val_metric(model, val_examples) if val_examples else None
        history.records.append(EpochRecord(epoch, epoch_loss / max(n_batches, 1), val))
        if val is not None:
            if val > best_metric:
                best_metric = val
                best_epoch = epoch
                best_snap = _snapshot(model)
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    history.stopped_early = True
                    break
    if best_epoch is not None:
        _restore(model, best_snap)
        history.best_epoch = best_epoch
        history.best_metric = best_metric
    return history


_KIND_MODEL = "model"


def save_model(model: BoEModel, path: str | Path) -> None:
    """Persist parameters, configuration, label set, deltas, and the
    checksum of the embedding file the model was trained against."""
    meta = {
        "dim": model.dim,
        "mode": model.head.mode,
        "feature_mask": model.attention.feature_mask.value,
        "threshold": model.head.threshold,
        "n_labels": model.head.n_labels,
        "labels": list(model.labels) if model.labels is not None else None,
        "embeddings_checksum": model.store.source_checksum,
    }
    with open(path, "wb") as fh:
        _binio.write_header(fh, _KIND_MODEL)
        _binio.write_str(fh, json.dumps(meta, sort_keys=True))
        _binio.write_f64_array(fh, model.attention.weights)
        _binio.write_f64_array(fh, model.head.weights)
        _binio.write_f64_array(fh, model.head.bias)
        deltas = list(model.store.deltas())
        _binio.write_u64(fh, len(deltas))
        for qid, vec in deltas:
            _binio.write_str(fh, qid)
            _binio.write_f64_array(fh, vec)


def read_model_meta(path: str | Path) -> dict:
    """Read only the configuration header of a model file (dimension,
    mode, labels, ...); cheap way to size a store before load_model."""
    with open(path, "rb") as fh:
        kind = _binio.read_header(fh)
        if kind != _KIND_MODEL:
            raise FormatError(f"{path} does not hold a model (kind={kind!r})")
        return json.loads(_binio.read_str(fh))


def load_model(path: str | Path, store: EntityEmbeddingStore) -> BoEModel:
    """Load a model against a store; replaces the store's deltas with the
    saved ones so forward outputs reproduce bit-for-bit."""
    with open(path, "rb") as fh:
        kind = _binio.read_header(fh)
        if kind != _KIND_MODEL:
            raise FormatError(f"{path} does not hold a model (kind={kind!r})")
        meta = json.loads(_binio.read_str(fh))
        if meta["dim"] != store.dim:
            raise ConfigurationError(
                f"model dimension {meta['dim']} does not match store dimension {store.dim}"
            )
        if meta["embeddings_checksum"] and meta["embeddings_checksum"] != store.source_checksum:
            logger.warning(
                "model %s was trained against a different embedding file "
                "(checksum mismatch)", path
            )
        mask = FeatureMask(meta["feature_mask"])
        w_a = _binio.read_f64_array(fh, (mask.n_features,))
        w_c = _binio.read_f64_array(fh, (meta["n_labels"], meta["dim"]))
        b = _binio.read_f64_array(fh, (meta["n_labels"],))
        n_deltas = _binio.read_u64(fh)
        store.clear_deltas()
        for _ in range(n_deltas):
            qid = _binio.read_str(fh)
            store.set_delta(qid, _binio.read_f64_array(fh, (meta["dim"],)))
        _binio.expect_eof(fh)
    attention = AttentionConfig(mask, w_a)
    head = ClassifierHead(weights=w_c, bias=b, mode=meta["mode"], threshold=meta["threshold"])
    model = BoEModel(attention, head, store)
    model.labels = tuple(meta["labels"]) if meta["labels"] is not None else None
    return model
