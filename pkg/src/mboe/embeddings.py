"""QID-to-vector store with deterministic random-init fallback.

Base vectors come from a word2vec-style text file (header ``N d``, then
one ``qid v1 ... vd`` row per line).  Entities absent from the file get
a seeded uniform fallback vector that is a pure function of
(qid, init_seed, init_scale), memoized so every lookup observes the same
array.  Trainable updates live in a separate delta map so the base file
stays read-only and training is reversible.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .errors import ConfigurationError, IngestionError

DEFAULT_DIM = 768
DEFAULT_INIT_SCALE = 0.02


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0.0 by convention when either vector is zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class EntityEmbeddingStore:
    def __init__(
        self,
        dim: int = DEFAULT_DIM,
        base: Mapping[str, np.ndarray] | None = None,
        *,
        init_seed: int = 0,
        init_scale: float = DEFAULT_INIT_SCALE,
        source_checksum: str = "",
    ):
        if dim <= 0:
            raise ConfigurationError("embedding dimension must be positive")
        if init_scale <= 0:
            raise ConfigurationError("init_scale must be positive")
        self.dim = dim
        self.init_seed = init_seed
        self.init_scale = init_scale
        self.source_checksum = source_checksum
        self._base: dict[str, np.ndarray] = {}
        self._fallback: dict[str, np.ndarray] = {}
        self._deltas: dict[str, np.ndarray] = {}
        if base:
            for qid, vec in base.items():
                arr = np.asarray(vec, dtype=np.float64)
                if arr.shape != (dim,):
                    raise ConfigurationError(
                        f"vector for {qid} has shape {arr.shape}, expected ({dim},)"
                    )
                arr = arr.copy()
                arr.flags.writeable = False
                self._base[qid] = arr

    def __len__(self) -> int:
        return len(self._base)

    def __contains__(self, qid: str) -> bool:
        return qid in self._base

    def base_vector(self, qid: str) -> np.ndarray:
        """Base vector, falling back to the seeded random vector (memoized)."""
        vec = self._base.get(qid)
        if vec is None:
            vec = self._fallback.get(qid)
            if vec is None:
                vec = self._fallback.setdefault(qid, self._init_vector(qid))
        return vec

    def _init_vector(self, qid: str) -> np.ndarray:
        digest = hashlib.blake2b(
            qid.encode("utf-8"), digest_size=16, key=str(self.init_seed).encode()
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        vec = rng.uniform(-self.init_scale, self.init_scale, self.dim)
        vec.flags.writeable = False
        return vec

    def get(self, qid: str) -> np.ndarray:
        """Effective vector: base (or fallback) plus delta."""
        base = self.base_vector(qid)
        delta = self._deltas.get(qid)
        if delta is None:
            return base
        return base + delta

    def delta(self, qid: str) -> np.ndarray | None:
        return self._deltas.get(qid)

    def set_delta(self, qid: str, vec: np.ndarray) -> None:
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise ConfigurationError(f"delta for {qid} has shape {arr.shape}, expected ({self.dim},)")
        self._deltas[qid] = arr.copy()

    def clear_delta(self, qid: str) -> None:
        self._deltas.pop(qid, None)

    def clear_deltas(self) -> None:
        self._deltas.clear()

    def deltas(self) -> Iterator[tuple[str, np.ndarray]]:
        """Current deltas, sorted by QID (deterministic serialization order)."""
        return iter(sorted(self._deltas.items()))


def load_embeddings(
    path: str | Path,
    dim: int | None = None,
    *,
    init_seed: int = 0,
    init_scale: float = DEFAULT_INIT_SCALE,
) -> EntityEmbeddingStore:
    """Load a word2vec-text embedding file into a store.

    When `dim` is given, the file's dimension must match it.
    """
    base: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise IngestionError(f"{path}:1: header must be 'N d', got {header.strip()!r}")
        try:
            n_vectors, file_dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise IngestionError(f"{path}:1: non-numeric header {header.strip()!r}") from None
        if file_dim <= 0 or n_vectors < 0:
            raise IngestionError(f"{path}:1: invalid header values {header.strip()!r}")
        if dim is not None and file_dim != dim:
            raise ConfigurationError(
                f"{path}: file dimension {file_dim} does not match expected {dim}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(" ")
            if len(fields) != file_dim + 1:
                raise IngestionError(
                    f"{path}:{lineno}: expected 1 + {file_dim} fields, got {len(fields)}"
                )
            qid = fields[0]
            try:
                base[qid] = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: non-numeric vector component") from None
    if len(base) != n_vectors:
        raise IngestionError(f"{path}: header promises {n_vectors} vectors, found {len(base)}")
    checksum = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return EntityEmbeddingStore(
        file_dim,
        base,
        init_seed=init_seed,
        init_scale=init_scale,
        source_checksum=checksum,
    )


def save_embeddings(store: EntityEmbeddingStore, path: str | Path) -> None:
    """Write base vectors in word2vec text format (mainly for fixtures)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(store)} {store.dim}\n")
        for qid in sorted(store._base):
            vec = store._base[qid]
            fh.write(qid + " " + " ".join(repr(float(x)) for x in vec) + "\n")
