"""Attention-based news and user encoders with NCE training.

A news article is encoded from its (frozen) title word embeddings by
multi-head self-attention followed by additive attention pooling; a user
is encoded from their clicked-news vectors by the same architecture.
Click probability is the dot product of the two vectors.  Training
minimizes the NCE loss: for each clicked candidate, K non-clicked
candidates from the same impression form the negatives, and the loss is
-log softmax(positive | positive + negatives), averaged over samples.

Sequences stay ragged (no padding, no positional signal); titles are
truncated to the first ``max_title_tokens`` tokens and histories to the
``max_history`` most recent clicks.
"""

from __future__ import annotations

import json
import math
import os
import struct
import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .errors import (
    AllDegenerate,
    ConfigError,
    DivergedCost,
    EmptyHistory,
    InsufficientNegatives,
    NoKnownTokens,
    NonfiniteParameter,
)
from .glove import EmbeddingLookup
from .metrics import ImpressionResult
from .mind import ImpressionLog

MODEL_MAGIC = b"NRECMDL1"


@dataclass(frozen=True, slots=True)
class ModelConfig:
    heads: int = 16
    d_head: int = 16
    d_attn: int = 200
    negatives: int = 4
    max_title_tokens: int = 30
    max_history: int = 50
    learning_rate: float = 1e-3
    epochs: int = 3
    batch_size: int = 64
    seed: int = 1

    @property
    def d_model(self) -> int:
        return self.heads * self.d_head

    def validate(self) -> "ModelConfig":
        for name in ("heads", "d_head", "d_attn", "negatives", "max_title_tokens",
                     "max_history", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        return self

    def to_dict(self) -> dict:
        return {
            "heads": self.heads,
            "d_head": self.d_head,
            "d_attn": self.d_attn,
            "negatives": self.negatives,
            "max_title_tokens": self.max_title_tokens,
            "max_history": self.max_history,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }


@dataclass(slots=True)
class EncoderParams:
    """One attention encoder: per-head projections plus the pooling layer."""

    Wq: list[ad.Tensor]
    Wk: list[ad.Tensor]
    Wv: list[ad.Tensor]
    proj: ad.Tensor
    query: ad.Tensor

    def tensors(self) -> list[ad.Tensor]:
        out: list[ad.Tensor] = []
        for q, k, v in zip(self.Wq, self.Wk, self.Wv):
            out.extend((q, k, v))
        out.append(self.proj)
        out.append(self.query)
        return out


@dataclass(slots=True)
class ModelParams:
    embed_dim: int
    config: ModelConfig
    news: EncoderParams
    user: EncoderParams

    def tensors(self) -> list[ad.Tensor]:
        return self.news.tensors() + self.user.tensors()


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    lim = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


def _init_encoder(rng: np.random.Generator, input_dim: int, cfg: ModelConfig, tag: str) -> EncoderParams:
    d_model = cfg.d_model
    Wq, Wk, Wv = [], [], []
    for h in range(cfg.heads):
        Wq.append(ad.parameter(_glorot(rng, input_dim, cfg.d_head, (input_dim, cfg.d_head)), f"{tag}.Wq{h}"))
        Wk.append(ad.parameter(_glorot(rng, input_dim, cfg.d_head, (input_dim, cfg.d_head)), f"{tag}.Wk{h}"))
        Wv.append(ad.parameter(_glorot(rng, input_dim, cfg.d_head, (input_dim, cfg.d_head)), f"{tag}.Wv{h}"))
    proj = ad.parameter(_glorot(rng, d_model, cfg.d_attn, (d_model, cfg.d_attn)), f"{tag}.proj")
    query = ad.parameter(_glorot(rng, cfg.d_attn, 1, cfg.d_attn), f"{tag}.query")
    return EncoderParams(Wq=Wq, Wk=Wk, Wv=Wv, proj=proj, query=query)


def init_params(embed_dim: int, config: ModelConfig) -> ModelParams:
    """Seeded Glorot-uniform init; draw order is fixed, so fully reproducible."""
    config.validate()
    if embed_dim < 1:
        raise ConfigError(f"embed_dim must be >= 1, got {embed_dim}")
    rng = np.random.default_rng(config.seed)
    news = _init_encoder(rng, embed_dim, config, "news")
    user = _init_encoder(rng, config.d_model, config, "user")
    return ModelParams(embed_dim=embed_dim, config=config, news=news, user=user)


def self_attention(x: ad.Tensor, enc: EncoderParams, d_head: int) -> ad.Tensor:
    """Multi-head scaled dot-product self-attention over rows of ``x``."""
    inv_sqrt = 1.0 / math.sqrt(d_head)
    head_outputs = []
    for Wq, Wk, Wv in zip(enc.Wq, enc.Wk, enc.Wv):
        q = ad.matmul(x, Wq)
        k = ad.matmul(x, Wk)
        v = ad.matmul(x, Wv)
        attn = ad.softmax(ad.scale(ad.matmul(q, ad.transpose(k)), inv_sqrt))
        head_outputs.append(ad.matmul(attn, v))
    if len(head_outputs) == 1:
        return head_outputs[0]
    return ad.concat(head_outputs, axis=1)


def additive_pool(seq: ad.Tensor, enc: EncoderParams) -> ad.Tensor:
    """Collapse a (length, d) sequence to one d-vector by learned weights."""
    scores = ad.matmul(ad.tanh(ad.matmul(seq, enc.proj)), enc.query)
    weights = ad.softmax(scores)
    return ad.matmul(weights, seq)


def _encode_sequence(x: ad.Tensor, enc: EncoderParams, d_head: int) -> ad.Tensor:
    return additive_pool(self_attention(x, enc, d_head), enc)


def title_embedding_rows(tokens: Sequence[str], lookup: EmbeddingLookup, max_tokens: int) -> np.ndarray:
    """Stack embeddings of the first ``max_tokens`` known tokens of a title."""
    rows = []
    for tok in tokens[:max_tokens]:
        vec = lookup.get(tok)
        if vec is not None:
            rows.append(vec)
    if not rows:
        raise NoKnownTokens(
            f"no embeddable token among {list(tokens[:max_tokens])!r}"
        )
    return np.stack(rows)


def encode_news(tokens: Sequence[str], lookup: EmbeddingLookup, params: ModelParams) -> ad.Tensor:
    """Title tokens -> news vector (d_model,).  Embeddings stay constant."""
    x = ad.constant(title_embedding_rows(tokens, lookup, params.config.max_title_tokens))
    return _encode_sequence(x, params.news, params.config.d_head)


def encode_user(history: ad.Tensor, params: ModelParams) -> ad.Tensor:
    """Matrix of clicked-news vectors (m, d_model) -> user vector (d_model,)."""
    if history.ndim != 2 or history.shape[0] < 1:
        raise EmptyHistory(f"user history must be a nonempty matrix, got shape {history.shape}")
    return _encode_sequence(history, params.user, params.config.d_head)


def score_click(user_vec: ad.Tensor, news_vec: ad.Tensor) -> ad.Tensor:
    return ad.dot(user_vec, news_vec)


def cold_start_user_vector(params: ModelParams) -> np.ndarray:
    """Users with no usable history score candidates from the zero vector."""
    return np.zeros(params.config.d_model)


def nce_probability(pos_score: float, neg_scores: Sequence[float]) -> float:
    """exp(pos) / (exp(pos) + sum exp(neg)), computed with max subtraction."""
    scores = [float(pos_score)] + [float(s) for s in neg_scores]
    m = max(scores)
    exps = [math.exp(s - m) for s in scores]
    return exps[0] / math.fsum(exps)


def nce_loss(probabilities: Sequence[float]) -> float:
    """Mean negative log probability over a batch of NCE probabilities."""
    if len(probabilities) == 0:
        raise AllDegenerate("cannot average a loss over zero samples")
    return math.fsum(-math.log(p) for p in probabilities) / len(probabilities)


def sample_loss(user_vec: ad.Tensor, cand_vecs: Sequence[ad.Tensor]) -> ad.Tensor:
    """-log p for one sample; ``cand_vecs[0]`` is the clicked candidate."""
    scores = ad.stack([score_click(user_vec, c) for c in cand_vecs])
    return ad.sub(ad.logsumexp(scores), ad.pick(scores, 0))


class Adam:
    """Adam with bias correction; operates on autodiff parameter tensors."""

    def __init__(self, params: Sequence[ad.Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g is None:
                continue
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


@dataclass(frozen=True, slots=True)
class TrainSample:
    history: tuple[str, ...]
    positive: str
    negatives: tuple[str, ...]


def _encodable_ids(news_tokens: Mapping[str, Sequence[str]], lookup: EmbeddingLookup,
                   max_tokens: int) -> set[str]:
    ok = set()
    for nid, tokens in news_tokens.items():
        if any(tok in lookup for tok in tokens[:max_tokens]):
            ok.add(nid)
    return ok


def build_train_samples(
    logs: Sequence[ImpressionLog],
    news_tokens: Mapping[str, Sequence[str]],
    lookup: EmbeddingLookup,
    config: ModelConfig,
    rng: np.random.Generator,
) -> list[TrainSample]:
    """One sample per clicked candidate: history, the click, K negatives.

    Negatives are drawn uniformly without replacement from the same
    impression's non-clicked candidates; if fewer than K exist they are
    drawn with replacement and a warning is issued (once).  Impressions
    with no usable history or no encodable negative yield no samples.
    """
    encodable = _encodable_ids(news_tokens, lookup, config.max_title_tokens)
    samples: list[TrainSample] = []
    warned = False
    k = config.negatives
    for log in logs:
        history = tuple(nid for nid in log.history if nid in encodable)[-config.max_history:]
        if not history:
            continue
        positives = [nid for nid, lab in log.candidates if lab == 1 and nid in encodable]
        pool = [nid for nid, lab in log.candidates if lab == 0 and nid in encodable]
        if not positives or not pool:
            continue
        for pos in positives:
            if len(pool) >= k:
                chosen = rng.choice(len(pool), size=k, replace=False)
            else:
                if not warned:
                    warnings.warn(
                        f"impression {log.impression_id} has {len(pool)} non-clicked "
                        f"candidates, fewer than {k}; sampling negatives with replacement",
                        InsufficientNegatives,
                    )
                    warned = True
                chosen = rng.choice(len(pool), size=k, replace=True)
            samples.append(TrainSample(
                history=history,
                positive=pos,
                negatives=tuple(pool[int(c)] for c in chosen),
            ))
    return samples


def _check_finite(params: ModelParams) -> None:
    for t in params.tensors():
        if not np.isfinite(t.data).all():
            raise NonfiniteParameter(f"model parameter {t.name or '<unnamed>'} contains nan/inf")


def train_model(
    logs: Sequence[ImpressionLog],
    news_tokens: Mapping[str, Sequence[str]],
    lookup: EmbeddingLookup,
    config: ModelConfig,
    params: ModelParams | None = None,
) -> tuple[ModelParams, list[float]]:
    """Fit both encoders with Adam; returns (params, per-epoch mean loss).

    Word embeddings are inputs, not parameters: they are never updated.
    One seed drives initialization, negative sampling, and the per-epoch
    shuffle, so identical inputs give identical parameters.
    """
    config.validate()
    if params is None:
        params = init_params(lookup.dim, config)
    elif params.embed_dim != lookup.dim:
        raise ConfigError(
            f"model expects {params.embed_dim}-dim embeddings, lookup provides {lookup.dim}"
        )
    seeds = np.random.SeedSequence(config.seed).spawn(2)
    sample_rng = np.random.default_rng(seeds[0])
    shuffle_rng = np.random.default_rng(seeds[1])
    samples = build_train_samples(logs, news_tokens, lookup, config, sample_rng)
    if not samples:
        raise AllDegenerate(
            "no trainable samples: every impression lacks usable history, "
            "a clicked candidate, or an encodable negative"
        )
    optimizer = Adam(params.tensors(), config.learning_rate)
    trace: list[float] = []
    for _ in range(config.epochs):
        order = shuffle_rng.permutation(len(samples))
        epoch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = [samples[i] for i in order[start : start + config.batch_size]]
            news_cache: dict[str, ad.Tensor] = {}

            def news_vec(nid: str) -> ad.Tensor:
                vec = news_cache.get(nid)
                if vec is None:
                    vec = encode_news(news_tokens[nid], lookup, params)
                    news_cache[nid] = vec
                return vec

            losses = []
            for sample in batch:
                history = ad.stack([news_vec(nid) for nid in sample.history])
                user_vec = encode_user(history, params)
                cands = [news_vec(sample.positive)]
                cands.extend(news_vec(nid) for nid in sample.negatives)
                losses.append(sample_loss(user_vec, cands))
            batch_loss = ad.mean(ad.stack(losses))
            if not math.isfinite(batch_loss.item()):
                raise DivergedCost(
                    f"training loss became non-finite (learning_rate={config.learning_rate})"
                )
            ad.backward(batch_loss)
            optimizer.step()
            epoch_losses.extend(l.item() for l in losses)
        _check_finite(params)
        trace.append(math.fsum(epoch_losses) / len(epoch_losses))
    return params, trace


def news_vector(tokens: Sequence[str], lookup: EmbeddingLookup, params: ModelParams) -> np.ndarray:
    """Numeric news vector for inference paths (no gradient kept)."""
    return encode_news(tokens, lookup, params).data.copy()


def user_vector(
    history_vectors: Sequence[np.ndarray], params: ModelParams
) -> np.ndarray:
    """Numeric user vector from already-encoded clicked news; zero if empty."""
    if not history_vectors:
        return cold_start_user_vector(params)
    history = ad.constant(np.stack(history_vectors))
    return encode_user(history, params).data.copy()


def score_impression_logs(
    logs: Sequence[ImpressionLog],
    news_tokens: Mapping[str, Sequence[str]],
    lookup: EmbeddingLookup,
    params: ModelParams,
) -> list[ImpressionResult]:
    """Score every candidate of every impression, preserving input order.

    News vectors are cached per article.  Candidates that cannot be
    encoded (unknown id or no embeddable token) score 0.0, as does every
    candidate of a user with no usable history (cold start).
    """
    cfg = params.config
    cache: dict[str, np.ndarray | None] = {}

    def vec(nid: str) -> np.ndarray | None:
        if nid in cache:
            return cache[nid]
        tokens = news_tokens.get(nid)
        out: np.ndarray | None = None
        if tokens is not None:
            try:
                out = news_vector(tokens, lookup, params)
            except NoKnownTokens:
                out = None
        cache[nid] = out
        return out

    results = []
    for log in logs:
        history_vectors = [v for nid in log.history[-cfg.max_history:]
                           if (v := vec(nid)) is not None]
        uvec = user_vector(history_vectors, params)
        scores = tuple(
            float(uvec @ cvec) if (cvec := vec(nid)) is not None else 0.0
            for nid, _ in log.candidates
        )
        results.append(ImpressionResult(
            impression_id=log.impression_id,
            labels=tuple(label for _, label in log.candidates),
            scores=scores,
        ))
    return results


def loss_trace_csv(trace: Sequence[float]) -> str:
    lines = ["epoch,mean_loss"]
    lines.extend(f"{n + 1},{value!r}" for n, value in enumerate(trace))
    return "\n".join(lines) + "\n"


def _config_from_dict(raw: dict) -> tuple[int, ModelConfig]:
    embed_dim = int(raw["embed_dim"])
    fields = {k: raw[k] for k in ModelConfig().to_dict() if k in raw}
    return embed_dim, replace(ModelConfig(), **fields)


def save_model(path: str, params: ModelParams) -> None:
    """Header (magic, length-prefixed config JSON) then tensors as
    little-endian float32 in declared order: news encoder per-head
    Q, K, V, then proj and query; user encoder the same."""
    header = dict(params.config.to_dict(), embed_dim=params.embed_dim)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [MODEL_MAGIC, struct.pack("<I", len(blob)), blob]
    chunks.extend(np.ascontiguousarray(t.data, dtype="<f4").tobytes() for t in params.tensors())
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(chunks))
    os.replace(tmp, path)


def load_model(path: str) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ConfigError(f"{path} is not a model checkpoint (bad magic)")
    (json_len,) = struct.unpack_from("<I", blob, len(MODEL_MAGIC))
    start = len(MODEL_MAGIC) + 4
    raw = json.loads(blob[start : start + json_len].decode("utf-8"))
    embed_dim, config = _config_from_dict(raw)
    params = init_params(embed_dim, config)
    offset = start + json_len
    for t in params.tensors():
        count = t.data.size
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        offset += count * 4
        t.data = values.reshape(t.data.shape).astype(np.float64)
    if offset != len(blob):
        raise ConfigError(
            f"{path} has {len(blob) - offset} trailing bytes; checkpoint does not match its config"
        )
    return params
