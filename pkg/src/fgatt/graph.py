"""Dynamic graph construction from per-timestep fuzzy-rough connectivity scores.

For each timestep of a window, the pairwise connectivity score blends the two
directed lower-approximation inclusion degrees between node feature vectors.
Scores are pooled over the window (mean by default) and sparsified by keeping
the strongest K neighbours per node, with self-loops removed.  An edge i -> j
means "j feeds node i's aggregation", so the retained targets of node i form
its attention neighbourhood.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import MaskedWindow
from .errors import ConfigError, InputError
from .fuzzy_rough import Kernel, fuzzy_lower_approx, lower_approx_matrix, similarity_class

POOLING_METHODS = ("mean", "max")
TOPK_MODES = ("per_node", "global")


@dataclass(frozen=True)
class GraphConfig:
    alpha: float = 0.5
    sigma: float = 1.0
    k: int = 8
    pooling: str = "mean"
    topk_mode: str = "per_node"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not np.isfinite(self.sigma) or self.sigma <= 0.0:
            raise ConfigError(f"sigma must be a positive real, got {self.sigma}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.pooling not in POOLING_METHODS:
            raise ConfigError(f"pooling must be one of {POOLING_METHODS}, got {self.pooling!r}")
        if self.topk_mode not in TOPK_MODES:
            raise ConfigError(f"topk_mode must be one of {TOPK_MODES}, got {self.topk_mode!r}")

    @property
    def kernel(self) -> Kernel:
        return Kernel(sigma=self.sigma)


@dataclass
class DynamicGraph:
    """Sparse directed edge list with connectivity-score weights; no self-loops."""

    node_count: int
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    built_from: str = ""

    def __post_init__(self):
        for s, t, _ in self.edges:
            if s == t:
                raise InputError(f"self-loop on node {s}")
            if not (0 <= s < self.node_count and 0 <= t < self.node_count):
                raise InputError(f"edge ({s}, {t}) outside 0..{self.node_count - 1}")

    def out_degree(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        for s, _, _ in self.edges:
            deg[s] += 1
        return deg

    def neighbor_array(self) -> np.ndarray:
        """Per-node neighbour targets as an (N, K') index array.

        Requires a uniform out-degree, which per-node top-K guarantees.
        """
        deg = self.out_degree()
        if self.node_count == 0 or deg.min() != deg.max() or deg.min() < 1:
            raise InputError(f"graph out-degrees are not uniform and positive: {deg.tolist()}")
        out = np.empty((self.node_count, int(deg[0])), dtype=np.int64)
        cursor = np.zeros(self.node_count, dtype=np.int64)
        for s, t, _ in self.edges:
            out[s, cursor[s]] = t
            cursor[s] += 1
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["source", "target", "weight"])
            for s, t, w in self.edges:
                writer.writerow([s, t, repr(float(w))])


def score_at_t(features_t: np.ndarray, i: int, j: int, alpha: float, kernel: Kernel) -> float:
    """Connectivity score of the pair (i, j) at one timestep.

    Blends the inclusion of i's neighbourhood in j's similarity class with the
    reverse direction: ``alpha * L(j<-i) + (1 - alpha) * L(i<-j)``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    f = np.asarray(features_t, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    d_j = similarity_class(f, f[j], kernel)
    d_i = similarity_class(f, f[i], kernel)
    lower_ij = fuzzy_lower_approx(f[i], d_j, f, kernel)
    lower_ji = fuzzy_lower_approx(f[j], d_i, f, kernel)
    return alpha * lower_ij + (1.0 - alpha) * lower_ji


def score_matrix_at_t(features_t: np.ndarray, alpha: float, kernel: Kernel) -> np.ndarray:
    """All-pairs connectivity scores at one timestep, shape (N, N).

    The diagonal is computed like any other pair and discarded later when
    self-loops are removed.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    lower = lower_approx_matrix(features_t, kernel)
    return alpha * lower + (1.0 - alpha) * lower.T


def pool_scores(scores: np.ndarray, method: str = "mean") -> np.ndarray:
    """Aggregate a (T, N, N) score tensor over the time axis."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise InputError(f"expected a (T, N, N) score tensor, got shape {s.shape}")
    if s.shape[0] == 0:
        raise InputError("cannot pool over an empty time axis")
    if method == "mean":
        return s.mean(axis=0)
    if method == "max":
        return s.max(axis=0)
    raise ConfigError(f"pooling must be one of {POOLING_METHODS}, got {method!r}")


def topk_neighbors(pooled: np.ndarray, k: int) -> np.ndarray:
    """Indices of each node's K strongest targets, ties broken by lower index.

    Self-pairs are excluded.  Returns an (N, K') array with
    K' = min(k, N - 1); row i is ordered by descending score.
    """
    p = np.asarray(pooled, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise InputError(f"expected a square score matrix, got shape {p.shape}")
    n = p.shape[0]
    if n < 2:
        raise InputError("need at least 2 nodes to build a graph")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    kp = min(k, n - 1)
    idx = np.arange(n)
    out = np.empty((n, kp), dtype=np.int64)
    for i in range(n):
        order = np.lexsort((idx, -p[i]))
        out[i] = order[order != i][:kp]
    return out


def build_graph(pooled: np.ndarray, k: int, mode: str = "per_node", built_from: str = "") -> DynamicGraph:
    """Sparsify a pooled score matrix into a DynamicGraph.

    ``per_node`` keeps each node's K strongest targets (so no node is
    isolated); ``global`` keeps the K strongest directed pairs overall.
    """
    p = np.asarray(pooled, dtype=np.float64)
    if mode == "per_node":
        neighbors = topk_neighbors(p, k)
        edges = [
            (i, int(j), float(p[i, j]))
            for i in range(p.shape[0])
            for j in neighbors[i]
        ]
    elif mode == "global":
        n = p.shape[0]
        if p.ndim != 2 or p.shape[1] != n:
            raise InputError(f"expected a square score matrix, got shape {p.shape}")
        if n < 2:
            raise InputError("need at least 2 nodes to build a graph")
        if k < 1:
            raise ConfigError(f"k must be >= 1, got {k}")
        src, tgt = np.where(~np.eye(n, dtype=bool))
        order = np.lexsort((tgt, src, -p[src, tgt]))[:k]
        edges = [(int(src[e]), int(tgt[e]), float(p[src[e], tgt[e]])) for e in order]
    else:
        raise ConfigError(f"topk_mode must be one of {TOPK_MODES}, got {mode!r}")
    return DynamicGraph(node_count=p.shape[0], edges=edges, built_from=built_from)


def window_score_tensor(values: np.ndarray, alpha: float, kernel: Kernel) -> np.ndarray:
    """Per-timestep score matrices for a (T, N) window of scalar node features."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise InputError(f"expected a (T, N) window, got shape {v.shape}")
    return np.stack([score_matrix_at_t(v[t][:, None], alpha, kernel) for t in range(v.shape[0])])


def construct_window_graph(window: MaskedWindow, config: GraphConfig) -> DynamicGraph:
    """Score -> pool -> top-K pipeline for one masked window.

    Node features are the raw normalized window values with missing entries
    zero-filled, exactly as the model sees them.
    """
    scores = window_score_tensor(window.values, config.alpha, config.kernel)
    pooled = pool_scores(scores, config.pooling)
    return build_graph(pooled, config.k, config.topk_mode, built_from=window.window_id)


def pooled_scores_batch(values: np.ndarray, config: GraphConfig) -> np.ndarray:
    """Pooled score matrices for a batch of windows, shape (B, N, N).

    Vectorised equivalent of ``window_score_tensor`` + ``pool_scores`` for
    scalar node features; iterates over timesteps to cap peak memory at
    B * N^3 per step.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 3:
        raise InputError(f"expected a (B, T, N) batch, got shape {v.shape}")
    b, t_len, n = v.shape
    if t_len == 0:
        raise InputError("cannot pool over an empty time axis")
    inv = 1.0 / (2.0 * config.sigma**2)
    acc = None
    for t in range(t_len):
        f = v[:, t, :]
        diff = f[:, :, None] - f[:, None, :]
        r = np.exp(-(diff * diff) * inv)                      # (B, N, N)
        r_t = np.swapaxes(r, 1, 2)
        lower = np.maximum((1.0 - r)[:, :, None, :], r_t[:, None, :, :]).min(axis=3)
        score = config.alpha * lower + (1.0 - config.alpha) * np.swapaxes(lower, 1, 2)
        if acc is None:
            acc = score
        elif config.pooling == "mean":
            acc += score
        else:
            np.maximum(acc, score, out=acc)
    return acc / t_len if config.pooling == "mean" else acc


def batch_neighbor_indices(values: np.ndarray, config: GraphConfig) -> np.ndarray:
    """Per-window attention neighbourhoods for a (B, T, N) batch, shape (B, N, K').

    Only the per-node mode yields the uniform out-degree the attention layers
    need.
    """
    if config.topk_mode != "per_node":
        raise ConfigError("batched neighbourhoods require topk_mode='per_node'")
    pooled = pooled_scores_batch(values, config)
    return np.stack([topk_neighbors(pooled[i], config.k) for i in range(pooled.shape[0])])
