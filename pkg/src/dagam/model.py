"""The network: GCN feature stack, self-attention graph pooling, readout,
an emotion classifier head, and a gradient-reversed domain classifier head.

One shared three-layer GCN stack produces node embeddings; a single extra
column projection turns those embeddings into per-node attention scores.
Pooling keeps the ceil(k*N) best-scoring nodes, scales their features by
their scores (that product is what trains the attention weights), and the
readout concatenates column means and maxima into a fixed-size embedding
consumed by both heads. Everything here accepts an extra leading batch
dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .errors import ConfigError, DegenerateInputError, DimensionError
from .tensor import Tensor, record_op

DEFAULT_GCN_HIDDEN = (64, 64, 64)
DEFAULT_EMOTION_HIDDEN = (64, 32)
DEFAULT_DOMAIN_HIDDEN = (32,)


def retained_count(k: float, n: int) -> int:
    """ceil(k * n) with a tiny guard against float products like 6.000000001."""
    if not 0.0 < k <= 1.0:
        raise ConfigError(f"pooling ratio must lie in (0, 1], got {k}")
    if n < 1:
        raise ConfigError(f"node count must be positive, got {n}")
    return max(1, math.ceil(k * n - 1e-9))


@dataclass
class ModelParams:
    """Parameter groups: feature extractor, emotion head, domain head.

    ``emotion`` holds [W, b] triples for three fully connected layers ending
    in the class logits; ``domain`` two layers ending in two domain logits.
    The groups are disjoint and together cover every trainable tensor.
    """

    gcn_weights: list[Tensor]
    w_att: Tensor
    emotion: list[Tensor]
    domain: list[Tensor]

    def feature_params(self) -> list[Tensor]:
        return [*self.gcn_weights, self.w_att]

    def emotion_params(self) -> list[Tensor]:
        return list(self.emotion)

    def domain_params(self) -> list[Tensor]:
        return list(self.domain)

    def all_params(self) -> list[Tensor]:
        return [*self.feature_params(), *self.emotion_params(), *self.domain_params()]

    def named(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, w in enumerate(self.gcn_weights):
            out[f"gcn.{i}.weight"] = w
        out["attention.weight"] = self.w_att
        for group, tensors in (("emotion", self.emotion), ("domain", self.domain)):
            for i in range(0, len(tensors), 2):
                out[f"{group}.{i // 2}.weight"] = tensors[i]
                out[f"{group}.{i // 2}.bias"] = tensors[i + 1]
        return out

    @property
    def n_classes(self) -> int:
        return self.emotion[-1].shape[0]

    @property
    def n_features(self) -> int:
        return self.gcn_weights[0].shape[0]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, (fan_in, fan_out)), requires_grad=True)


def _head(rng, widths: list[int]) -> list[Tensor]:
    tensors: list[Tensor] = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        tensors.append(_glorot(rng, fan_in, fan_out))
        tensors.append(Tensor(np.zeros(fan_out), requires_grad=True))
    return tensors


def init_params(
    n_features: int,
    n_classes: int,
    rng: np.random.Generator,
    gcn_hidden=DEFAULT_GCN_HIDDEN,
    emotion_hidden=DEFAULT_EMOTION_HIDDEN,
    domain_hidden=DEFAULT_DOMAIN_HIDDEN,
) -> ModelParams:
    """Glorot-uniform weights, zero biases, drawn in a fixed order."""
    if n_classes < 2:
        raise ConfigError(f"need at least two classes, got {n_classes}")
    widths = [n_features, *gcn_hidden]
    gcn_weights = [_glorot(rng, widths[i], widths[i + 1]) for i in range(len(gcn_hidden))]
    w_att = _glorot(rng, widths[-1], 1)
    embedding = 2 * widths[-1]
    emotion = _head(rng, [embedding, *emotion_hidden, n_classes])
    domain = _head(rng, [embedding, *domain_hidden, 2])
    return ModelParams(gcn_weights, w_att, emotion, domain)


def gcn_layer(laplacian: Tensor, x: Tensor, w: Tensor, activation=ops.relu) -> Tensor:
    """Graph propagation activation(L x W); pass activation=None for linear."""
    out = ops.matmul(ops.matmul(laplacian, x), w)
    return out if activation is None else activation(out)


def attention_scores(laplacian: Tensor, x: Tensor, w_att: Tensor) -> Tensor:
    """Per-node scores tanh(L x w) in (-1, 1), shape (..., N, 1)."""
    if w_att.shape[-1] != 1:
        raise DimensionError(f"attention weight must have one output column, got {w_att.shape}")
    return gcn_layer(laplacian, x, w_att, activation=ops.tanh)


def top_rank(scores: np.ndarray, k: float) -> np.ndarray:
    """Ascending indices of the ceil(k*N) largest scores.

    Ties break toward the lower original index. Accepts (..., N) or
    (..., N, 1) score arrays; the output has shape (..., M).
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim >= 2 and s.shape[-1] == 1:
        s = s[..., 0]
    n = s.shape[-1]
    count = retained_count(k, n)
    # Stable argsort of the negated scores keeps lower indices first on ties.
    order = np.argsort(-s, axis=-1, kind="stable")[..., :count]
    return np.sort(order, axis=-1)


@dataclass
class PoolResult:
    """Retained nodes after pooling.

    ``x_out`` rows are the kept feature rows scaled by their scores;
    ``a_out`` is the induced principal submatrix of the adjacency;
    ``index`` the kept node indices, ascending.
    """

    x_out: Tensor
    a_out: np.ndarray
    index: np.ndarray
    score_mask: Tensor


def sag_pool(
    x: Tensor,
    adjacency: np.ndarray,
    scores: Tensor,
    k: float,
    index: np.ndarray | None = None,
) -> PoolResult:
    """Keep the top ceil(k*N) nodes and scale their features by their scores.

    Passing ``index`` overrides the ranking (used to freeze the selection
    while gradient-checking, since the selection itself is piecewise
    constant). Gradients flow through the score multiplication.
    """
    if scores.shape[:-1] != x.shape[:-1]:
        raise DimensionError(f"scores {scores.shape} do not match features {x.shape}")
    adjacency = np.asarray(adjacency, dtype=np.float64)
    n = x.shape[-2]
    if adjacency.shape != (n, n):
        raise DimensionError(f"adjacency {adjacency.shape} does not match {n} nodes")
    if index is None:
        index = top_rank(scores.data, k)
    x_kept = ops.gather_rows(x, index)
    score_mask = ops.gather_rows(scores, index)
    x_out = ops.mul(x_kept, score_mask)
    a_out = adjacency[index[..., :, None], index[..., None, :]]
    return PoolResult(x_out, a_out, index, score_mask)


def readout(x: Tensor) -> Tensor:
    """Concatenated column means and column maxima: (..., M, F) -> (..., 2F)."""
    if x.ndim < 2:
        raise DimensionError(f"readout needs (..., nodes, features), got {x.shape}")
    if x.shape[-2] == 0:
        raise DegenerateInputError("readout over zero nodes")
    return ops.concat([ops.reduce_mean(x, axis=-2), ops.reduce_max(x, axis=-2)], axis=-1)


def grad_reverse(x: Tensor, lam: float) -> Tensor:
    """Identity forward; backward multiplies the upstream gradient by -lam."""
    if lam < 0:
        raise ConfigError(f"reversal strength must be >= 0, got {lam}")

    def backward(g):
        return (-lam * g,)

    return record_op("grad_reverse", (x,), x.data.copy(), backward, meta={"lam": lam})


def _feed_forward(x: Tensor, layers: list[Tensor]) -> Tensor:
    """Fully connected stack with relu between layers, linear at the end."""
    out = x
    pairs = [(layers[i], layers[i + 1]) for i in range(0, len(layers), 2)]
    for depth, (w, b) in enumerate(pairs):
        out = ops.add(ops.matmul(out, w), b)
        if depth < len(pairs) - 1:
            out = ops.relu(out)
    return out


def forward_batch(
    params: ModelParams,
    x: Tensor,
    laplacian: Tensor,
    adjacency: np.ndarray,
    k: float,
    lam: float = 1.0,
    pool_index: np.ndarray | None = None,
    domain_head: bool = True,
):
    """Run the network on (..., N, F) features.

    Returns (emotion probabilities, domain probabilities or None, PoolResult).
    The domain head can be skipped entirely for ablations and evaluation.
    A single (N, F) sample yields (C,) and (2,) probability vectors.
    """
    h = x
    for w in params.gcn_weights:
        h = gcn_layer(laplacian, h, w)
    scores = attention_scores(laplacian, h, params.w_att)
    pool = sag_pool(h, adjacency, scores, k, index=pool_index)
    embedding = readout(pool.x_out)
    single = embedding.ndim == 1  # heads need a row axis
    rows = ops.reshape(embedding, (1, embedding.shape[-1])) if single else embedding
    emotion = ops.softmax_rows(_feed_forward(rows, params.emotion))
    domain = None
    if domain_head:
        domain = ops.softmax_rows(_feed_forward(grad_reverse(rows, lam), params.domain))
    if single:
        emotion = ops.reshape(emotion, (params.n_classes,))
        if domain is not None:
            domain = ops.reshape(domain, (2,))
    return emotion, domain, pool


def forward(
    params: ModelParams,
    x: Tensor,
    laplacian: Tensor,
    adjacency: np.ndarray,
    k: float,
    lam: float = 1.0,
):
    """Single-sample forward: (N, F) features to (C,) and (2,) probabilities."""
    if x.ndim != 2:
        raise DimensionError(f"expected a single (N, F) sample, got {x.shape}")
    return forward_batch(params, x, laplacian, adjacency, k, lam)
