"""GloVe-style word embeddings trained on news text.

Pipeline: build a vocabulary over tokenized documents, count
distance-weighted co-occurrences inside a symmetric window, then fit
word/context vectors and biases by minimizing

    J = sum over stored pairs of  f(x_ij) * (w_i . wt_j + b_i + bt_j - log x_ij)^2

with per-parameter AdaGrad.  Only stored (nonzero) entries contribute.
The final vector for a word is ``w + wt``.
"""

from __future__ import annotations

import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._kernels import adagrad_sweep, backend_name
from .errors import (
    ConfigError,
    DivergedCost,
    EmptyCorpus,
    EmptyRow,
    EmptyVocabulary,
    NonfiniteParameter,
)
from .mind import write_text_atomic

TEXT_MAGIC = "NRECGLV1"
BINARY_MAGIC = b"NRECGLV1"


@dataclass(frozen=True, slots=True)
class Vocabulary:
    """Token inventory with stable integer ids.

    Ids are assigned by descending corpus frequency, ties broken
    lexicographically, so the same corpus always yields the same mapping.
    """

    tokens: tuple[str, ...]
    counts: tuple[int, ...]
    index: dict[str, int] = field(compare=False)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id_of(self, token: str) -> int | None:
        return self.index.get(token)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        """Map tokens to ids, silently dropping out-of-vocabulary ones."""
        idx = self.index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int64)


def build_vocab(documents: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    counts: dict[str, int] = {}
    for doc in documents:
        for tok in doc:
            counts[tok] = counts.get(tok, 0) + 1
    kept = [(tok, n) for tok, n in counts.items() if n >= min_count]
    if not kept:
        raise EmptyVocabulary(
            f"no token reaches min_count={min_count} (corpus has {len(counts)} distinct tokens)"
        )
    kept.sort(key=lambda item: (-item[1], item[0]))
    tokens = tuple(tok for tok, _ in kept)
    vocab_counts = tuple(n for _, n in kept)
    index = {tok: i for i, tok in enumerate(tokens)}
    return Vocabulary(tokens=tokens, counts=vocab_counts, index=index)


@dataclass(frozen=True, slots=True)
class CooccurrenceMatrix:
    """Sparse symmetric co-occurrence counts in coordinate form.

    Entries are sorted by (row, col) and strictly deduplicated; ``vals``
    holds the accumulated distance weights.
    """

    vocab_size: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    def value(self, i: int, j: int) -> float:
        lo = np.searchsorted(self.rows, i, side="left")
        hi = np.searchsorted(self.rows, i, side="right")
        k = lo + np.searchsorted(self.cols[lo:hi], j, side="left")
        if k < hi and self.cols[k] == j:
            return float(self.vals[k])
        return 0.0

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.searchsorted(self.rows, i, side="left")
        hi = np.searchsorted(self.rows, i, side="right")
        return self.cols[lo:hi], self.vals[lo:hi]

    def row_sum(self, i: int) -> float:
        _, vals = self.row(i)
        return float(math.fsum(vals.tolist()))

    def to_dict(self) -> dict[tuple[int, int], float]:
        return {
            (int(i), int(j)): float(v)
            for i, j, v in zip(self.rows, self.cols, self.vals)
        }


def _doc_pair_arrays(ids: np.ndarray, window: int) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """Directed (i, j, weight) chunks for one document.

    For positions p < q with q - p = k <= window the unordered pair gets
    weight 1/k: distinct tokens contribute to both (i, j) and (j, i),
    a self-pair contributes to the diagonal once.
    """
    out = []
    n = int(ids.size)
    for k in range(1, min(window, n - 1) + 1):
        a = ids[:-k]
        b = ids[k:]
        w = 1.0 / k
        off = a != b
        if off.any():
            ai = a[off]
            bi = b[off]
            out.append((np.concatenate([ai, bi]), np.concatenate([bi, ai]), w))
        diag = ~off
        if diag.any():
            di = a[diag]
            out.append((di, di, w))
    return out


def _accumulate_pairs(chunks: list[tuple[np.ndarray, np.ndarray, float]], vocab_size: int) -> CooccurrenceMatrix:
    if not chunks:
        return CooccurrenceMatrix(
            vocab_size=vocab_size,
            rows=np.empty(0, dtype=np.int64),
            cols=np.empty(0, dtype=np.int64),
            vals=np.empty(0, dtype=np.float64),
        )
    keys = np.concatenate([i.astype(np.int64) * vocab_size + j for i, j, _ in chunks])
    weights = np.concatenate([np.full(i.size, w, dtype=np.float64) for i, _, w in chunks])
    uniq, inverse = np.unique(keys, return_inverse=True)
    vals = np.zeros(uniq.size, dtype=np.float64)
    np.add.at(vals, inverse, weights)
    return CooccurrenceMatrix(
        vocab_size=vocab_size,
        rows=(uniq // vocab_size).astype(np.int64),
        cols=(uniq % vocab_size).astype(np.int64),
        vals=vals,
    )


def build_cooccurrence(
    documents: Sequence[Sequence[str]],
    vocab: Vocabulary,
    window: int = 5,
    threads: int = 1,
) -> CooccurrenceMatrix:
    """Count windowed co-occurrences over tokenized documents.

    With ``threads > 1`` documents are processed in contiguous shards and
    the shard results are merged in input order, so the totals are
    identical to a single-threaded run.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    vocab_size = len(vocab)

    def shard_chunks(docs: Sequence[Sequence[str]]) -> list[tuple[np.ndarray, np.ndarray, float]]:
        chunks: list[tuple[np.ndarray, np.ndarray, float]] = []
        for doc in docs:
            ids = vocab.encode(doc)
            if ids.size >= 2:
                chunks.extend(_doc_pair_arrays(ids, window))
        return chunks

    if threads == 1 or len(documents) < 2 * threads:
        all_chunks = shard_chunks(documents)
    else:
        bounds = np.linspace(0, len(documents), threads + 1, dtype=int)
        shards = [documents[bounds[t]:bounds[t + 1]] for t in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(shard_chunks, shards))
        all_chunks = [chunk for shard in results for chunk in shard]
    return _accumulate_pairs(all_chunks, vocab_size)


def cooccurrence_probabilities(matrix: CooccurrenceMatrix, i: int) -> dict[int, float]:
    """P(j | i) over the stored entries of row i."""
    cols, vals = matrix.row(i)
    if cols.size == 0:
        raise EmptyRow(f"row {i} has no stored co-occurrences")
    total = math.fsum(vals.tolist())
    return {int(j): float(v) / total for j, v in zip(cols, vals)}


@dataclass(frozen=True, slots=True)
class GloveConfig:
    dim: int = 50
    window: int = 5
    x_max: float = 100.0
    alpha: float = 0.75
    learning_rate: float = 0.05
    epochs: int = 25
    min_count: int = 5
    seed: int = 1

    def validate(self) -> "GloveConfig":
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.x_max <= 0:
            raise ConfigError(f"x_max must be > 0, got {self.x_max}")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {self.min_count}")
        return self

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "window": self.window,
            "x_max": self.x_max,
            "alpha": self.alpha,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "min_count": self.min_count,
            "seed": self.seed,
        }


@dataclass(slots=True)
class EmbeddingTable:
    """Trainable GloVe state: word/context vectors, biases, AdaGrad sums."""

    W: np.ndarray
    Wt: np.ndarray
    b: np.ndarray
    bt: np.ndarray
    accW: np.ndarray
    accWt: np.ndarray
    accb: np.ndarray
    accbt: np.ndarray

    @property
    def vocab_size(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def word_vectors(self) -> np.ndarray:
        return self.W + self.Wt

    def check_finite(self) -> None:
        for name in ("W", "Wt", "b", "bt"):
            arr = getattr(self, name)
            if not np.isfinite(arr).all():
                raise NonfiniteParameter(f"embedding parameter {name} contains nan/inf")


def init_table(vocab_size: int, dim: int, seed: int) -> EmbeddingTable:
    """Uniform(-0.5/dim, 0.5/dim) init for vectors and biases, unit AdaGrad sums.

    Draw order is fixed (W, Wt, b, bt) so a seed fully determines the state.
    """
    rng = np.random.default_rng(seed)
    lim = 0.5 / dim
    return EmbeddingTable(
        W=rng.uniform(-lim, lim, size=(vocab_size, dim)),
        Wt=rng.uniform(-lim, lim, size=(vocab_size, dim)),
        b=rng.uniform(-lim, lim, size=vocab_size),
        bt=rng.uniform(-lim, lim, size=vocab_size),
        accW=np.ones((vocab_size, dim)),
        accWt=np.ones((vocab_size, dim)),
        accb=np.ones(vocab_size),
        accbt=np.ones(vocab_size),
    )


def cost_weight(x: np.ndarray, x_max: float, alpha: float) -> np.ndarray:
    """f(x) = (x / x_max)^alpha for x < x_max, else 1."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < x_max, (x / x_max) ** alpha, 1.0)


def glove_cost(table: EmbeddingTable, matrix: CooccurrenceMatrix, config: GloveConfig) -> float:
    table.check_finite()
    if matrix.nnz == 0:
        return 0.0
    i = matrix.rows
    j = matrix.cols
    diff = (
        np.einsum("nd,nd->n", table.W[i], table.Wt[j])
        + table.b[i]
        + table.bt[j]
        - np.log(matrix.vals)
    )
    fw = cost_weight(matrix.vals, config.x_max, config.alpha)
    return float(np.sum(fw * diff * diff))


def glove_cost_grads(
    table: EmbeddingTable, matrix: CooccurrenceMatrix, config: GloveConfig
) -> tuple[float, dict[str, np.ndarray]]:
    """Cost plus analytic gradients for every parameter array."""
    table.check_finite()
    grads = {
        "W": np.zeros_like(table.W),
        "Wt": np.zeros_like(table.Wt),
        "b": np.zeros_like(table.b),
        "bt": np.zeros_like(table.bt),
    }
    if matrix.nnz == 0:
        return 0.0, grads
    i = matrix.rows
    j = matrix.cols
    diff = (
        np.einsum("nd,nd->n", table.W[i], table.Wt[j])
        + table.b[i]
        + table.bt[j]
        - np.log(matrix.vals)
    )
    fw = cost_weight(matrix.vals, config.x_max, config.alpha)
    cost = float(np.sum(fw * diff * diff))
    g = 2.0 * fw * diff
    np.add.at(grads["W"], i, g[:, None] * table.Wt[j])
    np.add.at(grads["Wt"], j, g[:, None] * table.W[i])
    np.add.at(grads["b"], i, g)
    np.add.at(grads["bt"], j, g)
    return cost, grads


def glove_train(
    matrix: CooccurrenceMatrix, config: GloveConfig
) -> tuple[EmbeddingTable, list[float]]:
    """Fit embeddings with per-entry AdaGrad; returns (table, per-epoch costs).

    Each epoch visits every stored entry once in a seeded shuffled order.
    The reported cost per epoch sums the weighted squared residuals as seen
    just before each update.  A non-finite cost aborts training.
    """
    config.validate()
    if matrix.nnz == 0:
        raise EmptyCorpus("cannot train embeddings: co-occurrence matrix has no entries")
    table = init_table(matrix.vocab_size, config.dim, config.seed)
    if config.epochs == 0:
        return table, []
    rng = np.random.default_rng(config.seed)
    fweight = cost_weight(matrix.vals, config.x_max, config.alpha)
    logx = np.log(matrix.vals)
    trace: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(matrix.nnz)
        cost = adagrad_sweep(
            order,
            matrix.rows,
            matrix.cols,
            fweight,
            logx,
            table.W,
            table.Wt,
            table.b,
            table.bt,
            table.accW,
            table.accWt,
            table.accb,
            table.accbt,
            config.learning_rate,
        )
        if not math.isfinite(cost):
            raise DivergedCost(
                f"training cost became non-finite at epoch {epoch + 1} "
                f"(learning_rate={config.learning_rate}, backend={backend_name()})"
            )
        trace.append(float(cost))
    table.check_finite()
    return table, trace


def cost_trace_csv(trace: Sequence[float]) -> str:
    lines = ["epoch,cost"]
    lines.extend(f"{n + 1},{cost!r}" for n, cost in enumerate(trace))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, slots=True)
class EmbeddingLookup:
    """Immutable token -> vector map used by the encoders and retrieval."""

    tokens: tuple[str, ...]
    matrix: np.ndarray
    index: dict[str, int] = field(compare=False)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def get(self, token: str) -> np.ndarray | None:
        i = self.index.get(token)
        if i is None:
            return None
        return self.matrix[i]

    @classmethod
    def from_table(cls, vocab: Vocabulary, table: EmbeddingTable) -> "EmbeddingLookup":
        if len(vocab) != table.vocab_size:
            raise ConfigError(
                f"vocabulary size {len(vocab)} does not match table size {table.vocab_size}"
            )
        return cls(
            tokens=vocab.tokens,
            matrix=table.word_vectors(),
            index={tok: i for i, tok in enumerate(vocab.tokens)},
        )

    @classmethod
    def from_rows(cls, tokens: Sequence[str], matrix: np.ndarray) -> "EmbeddingLookup":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(tokens):
            raise ConfigError(
                f"embedding matrix shape {matrix.shape} does not match {len(tokens)} tokens"
            )
        return cls(
            tokens=tuple(tokens),
            matrix=matrix,
            index={tok: i for i, tok in enumerate(tokens)},
        )


def embed_lookup(lookup: EmbeddingLookup, token: str) -> np.ndarray | None:
    return lookup.get(token)


def _format_value(v: float) -> str:
    return np.format_float_positional(np.float32(v), unique=True, trim="0")


def _sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".meta.json"


def _write_sidecar(path: str, fmt: str, config: GloveConfig | None) -> None:
    meta = {"format": fmt}
    if config is not None:
        meta["config"] = config.to_dict()
    write_text_atomic(_sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_sidecar(path: str) -> dict | None:
    sidecar = _sidecar_path(path)
    if not os.path.exists(sidecar):
        return None
    with open(sidecar, encoding="utf-8") as fh:
        return json.load(fh)


def save_embeddings_text(path: str, lookup: EmbeddingLookup, config: GloveConfig | None = None) -> None:
    """One line per token: token then float32-precision components.

    Components are printed with just enough digits to round-trip their
    float32 value exactly.
    """
    lines = []
    m32 = lookup.matrix.astype(np.float32)
    for tok, row in zip(lookup.tokens, m32):
        lines.append(tok + " " + " ".join(_format_value(v) for v in row))
    write_text_atomic(path, "\n".join(lines) + "\n")
    _write_sidecar(path, "text", config)


def load_embeddings_text(path: str) -> EmbeddingLookup:
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            tokens.append(parts[0])
            rows.append(np.array([np.float32(p) for p in parts[1:]], dtype=np.float64))
    if not tokens:
        raise EmptyVocabulary(f"embedding file {path} has no rows")
    widths = {r.size for r in rows}
    if len(widths) != 1:
        raise ConfigError(f"embedding file {path} has inconsistent row widths {sorted(widths)}")
    return EmbeddingLookup.from_rows(tokens, np.vstack(rows))


def save_embeddings_binary(path: str, lookup: EmbeddingLookup, config: GloveConfig | None = None) -> None:
    """Magic, vocab size, dim, then row-major little-endian float32 data.

    Tokens and training settings travel in the ``.meta.json`` sidecar.
    """
    m32 = np.ascontiguousarray(lookup.matrix, dtype="<f4")
    payload = BINARY_MAGIC + struct.pack("<II", len(lookup.tokens), lookup.dim) + m32.tobytes()
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    meta = {"format": "binary", "tokens": list(lookup.tokens)}
    if config is not None:
        meta["config"] = config.to_dict()
    write_text_atomic(_sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_embeddings_binary(path: str) -> EmbeddingLookup:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(BINARY_MAGIC)] != BINARY_MAGIC:
        raise ConfigError(f"{path} is not an embedding checkpoint (bad magic)")
    vocab_size, dim = struct.unpack_from("<II", blob, len(BINARY_MAGIC))
    offset = len(BINARY_MAGIC) + 8
    expect = vocab_size * dim * 4
    if len(blob) - offset != expect:
        raise ConfigError(
            f"{path} payload is {len(blob) - offset} bytes, expected {expect} for {vocab_size}x{dim}"
        )
    matrix = np.frombuffer(blob, dtype="<f4", count=vocab_size * dim, offset=offset)
    matrix = matrix.reshape(vocab_size, dim).astype(np.float64)
    meta = read_sidecar(path)
    if meta is None or "tokens" not in meta:
        raise ConfigError(f"{path} is missing its .meta.json sidecar with the token list")
    tokens = meta["tokens"]
    if len(tokens) != vocab_size:
        raise ConfigError(
            f"{path} sidecar lists {len(tokens)} tokens but the checkpoint stores {vocab_size} rows"
        )
    return EmbeddingLookup.from_rows(tokens, matrix)


def load_embeddings(path: str) -> EmbeddingLookup:
    """Load either checkpoint format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
    if head == BINARY_MAGIC:
        return load_embeddings_binary(path)
    return load_embeddings_text(path)
