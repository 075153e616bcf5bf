"""Graph attention block over fuzzy-rough dynamic graphs.

Single-head GAT scoring: per edge, e_ij = LeakyReLU(a . [W h_i || W h_j]),
normalised by softmax over each node's neighbourhood.  The block wraps the
aggregation with dropout, a residual connection, and post-residual layer
normalisation.  Neighbourhoods are dense (N, K') index arrays, one row per
node, as produced by per-node top-K sparsification.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigError, InputError


def layer_norm(x: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Normalise over the last axis with population variance, then affine-shift."""
    mu = x.mean(dim=-1, keepdim=True)
    var = x.var(dim=-1, unbiased=False, keepdim=True)
    return (x - mu) / torch.sqrt(var + eps) * gamma + beta


class LayerNorm(nn.Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.gamma = nn.Parameter(torch.ones(dim))
        self.beta = nn.Parameter(torch.zeros(dim))

    def forward(self, x):
        return layer_norm(x, self.gamma, self.beta, self.eps)


def _flatten_leading(x: torch.Tensor, neighbors: torch.Tensor):
    """Broadcast (B, N, K') neighbourhoods over any extra time axis of x."""
    if neighbors.dim() != 3:
        raise InputError(f"neighbors must be (B, N, K'), got shape {tuple(neighbors.shape)}")
    if neighbors.shape[-1] < 1:
        raise InputError("every node needs at least one neighbour")
    if x.dim() == 4:
        b, t, n, d = x.shape
        nb = neighbors[:, None].expand(b, t, n, neighbors.shape[-1])
        return x.reshape(b * t, n, d), nb.reshape(b * t, n, -1), (b, t)
    if x.dim() == 3:
        return x, neighbors, None
    raise InputError(f"features must be (B, N, d) or (B, T, N, d), got shape {tuple(x.shape)}")


class GraphAttention(nn.Module):
    """Learnable-attention neighbourhood aggregation, h_i' = LeakyReLU(sum_j a_ij W h_j)."""

    def __init__(self, in_dim: int, out_dim: int, leaky_slope: float = 0.01):
        super().__init__()
        if leaky_slope <= 0:
            raise ConfigError(f"leaky_slope must be positive, got {leaky_slope}")
        self.leaky_slope = leaky_slope
        self.weight = nn.Linear(in_dim, out_dim, bias=False)
        self.attn_src = nn.Parameter(torch.empty(out_dim))
        self.attn_dst = nn.Parameter(torch.empty(out_dim))
        nn.init.uniform_(self.attn_src, -(out_dim**-0.5), out_dim**-0.5)
        nn.init.uniform_(self.attn_dst, -(out_dim**-0.5), out_dim**-0.5)

    def _scores_and_feats(self, x, neighbors):
        flat, nb, lead = _flatten_leading(x, neighbors)
        m, n, _ = flat.shape
        kp = nb.shape[-1]
        wh = self.weight(flat)                                        # (M, N, Do)
        src = (wh * self.attn_src).sum(-1)                            # (M, N)
        dst = (wh * self.attn_dst).sum(-1)
        dst_j = torch.gather(dst, 1, nb.reshape(m, n * kp)).reshape(m, n, kp)
        logits = F.leaky_relu(src[:, :, None] + dst_j, self.leaky_slope)
        coeffs = torch.softmax(logits, dim=-1)
        idx = nb.reshape(m, n * kp, 1).expand(m, n * kp, wh.shape[-1])
        neigh = torch.gather(wh, 1, idx).reshape(m, n, kp, -1)
        return coeffs, neigh, lead

    def coefficients(self, x: torch.Tensor, neighbors: torch.Tensor) -> torch.Tensor:
        """Softmax attention weights per neighbourhood; rows sum to 1."""
        coeffs, _, lead = self._scores_and_feats(x, neighbors)
        if lead is not None:
            b, t = lead
            coeffs = coeffs.reshape(b, t, *coeffs.shape[1:])
        return coeffs

    def forward(self, x: torch.Tensor, neighbors: torch.Tensor) -> torch.Tensor:
        coeffs, neigh, lead = self._scores_and_feats(x, neighbors)
        out = F.leaky_relu((coeffs[..., None] * neigh).sum(dim=2), self.leaky_slope)
        if lead is not None:
            b, t = lead
            out = out.reshape(b, t, *out.shape[1:])
        return out


class FgatBlock(nn.Module):
    """Residual GAT sub-layer with dropout and post-residual normalisation."""

    def __init__(self, dim: int, dropout: float = 0.1, leaky_slope: float = 0.01, eps: float = 1e-5):
        super().__init__()
        if not 0.0 <= dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {dropout}")
        self.dropout = dropout
        self.gat = GraphAttention(dim, dim, leaky_slope)
        self.norm = LayerNorm(dim, eps)

    def forward(self, x: torch.Tensor, neighbors: torch.Tensor, training: bool = False) -> torch.Tensor:
        agg = self.gat(x, neighbors)
        return self.norm(x + F.dropout(agg, self.dropout, training=training))
