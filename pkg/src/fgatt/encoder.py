"""Transformer encoder stack for per-node temporal modelling.

Encoder-only and bidirectional (no causal mask): each layer is multi-head
self-attention and a position-wise feedforward, each followed by dropout, a
residual connection, and post-residual layer normalisation.  Positions enter
through a fixed sinusoidal table added to the input embedding by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigError, InputError
from .fgat import LayerNorm


@dataclass(frozen=True)
class EncoderConfig:
    d_model: int = 64
    heads: int = 4
    d_ff: int = 256
    layers: int = 2
    dropout_rate: float = 0.1
    max_len: int = 512

    def __post_init__(self):
        if min(self.d_model, self.heads, self.d_ff, self.layers, self.max_len) < 1:
            raise ConfigError(f"all encoder sizes must be positive: {self}")
        if self.d_model % self.heads != 0:
            raise ConfigError(f"heads ({self.heads}) must divide d_model ({self.d_model})")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")


def scaled_dot_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor, return_weights: bool = False):
    """softmax(Q K^T / sqrt(d_k)) V over the key axis; supports leading batch axes."""
    if q.shape[-1] != k.shape[-1]:
        raise InputError(f"query/key dimension mismatch: {q.shape[-1]} vs {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise InputError(f"key/value count mismatch: {k.shape[-2]} vs {v.shape[-2]}")
    scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
    weights = torch.softmax(scores, dim=-1)
    out = weights @ v
    return (out, weights) if return_weights else out


def positional_encoding(length: int, d_model: int, dtype=torch.float32) -> torch.Tensor:
    """Fixed sinusoidal position table of shape (length, d_model), entries in [-1, 1]."""
    if length < 1 or d_model < 1:
        raise InputError(f"length and d_model must be >= 1, got {length}, {d_model}")
    pos = torch.arange(length, dtype=torch.float64)[:, None]
    idx = torch.arange(0, d_model, 2, dtype=torch.float64)
    angles = pos / torch.pow(10000.0, idx / d_model)
    table = torch.zeros(length, d_model, dtype=torch.float64)
    table[:, 0::2] = torch.sin(angles)
    table[:, 1::2] = torch.cos(angles[:, : d_model // 2])
    return table.to(dtype)


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, heads: int):
        super().__init__()
        if d_model % heads != 0:
            raise ConfigError(f"heads ({heads}) must divide d_model ({d_model})")
        self.heads = heads
        self.head_dim = d_model // heads
        self.proj_q = nn.Linear(d_model, d_model)
        self.proj_k = nn.Linear(d_model, d_model)
        self.proj_v = nn.Linear(d_model, d_model)
        self.proj_out = nn.Linear(d_model, d_model)

    def forward(self, x: torch.Tensor, return_weights: bool = False):
        b, t, d = x.shape

        def split(proj):
            return proj(x).reshape(b, t, self.heads, self.head_dim).transpose(1, 2)

        out, weights = scaled_dot_attention(split(self.proj_q), split(self.proj_k), split(self.proj_v), return_weights=True)
        out = self.proj_out(out.transpose(1, 2).reshape(b, t, d))
        return (out, weights) if return_weights else out


class EncoderLayer(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.dropout = config.dropout_rate
        self.attn = MultiHeadAttention(config.d_model, config.heads)
        self.ff_in = nn.Linear(config.d_model, config.d_ff)
        self.ff_out = nn.Linear(config.d_ff, config.d_model)
        self.norm_attn = LayerNorm(config.d_model)
        self.norm_ff = LayerNorm(config.d_model)

    def forward(self, x: torch.Tensor, training: bool = False, return_weights: bool = False):
        attn_out, weights = self.attn(x, return_weights=True)
        x = self.norm_attn(x + F.dropout(attn_out, self.dropout, training=training))
        ff = self.ff_out(F.relu(self.ff_in(x)))
        x = self.norm_ff(x + F.dropout(ff, self.dropout, training=training))
        return (x, weights) if return_weights else x


class EncoderStack(nn.Module):
    """L stacked encoder layers sharing one configuration."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.layers))

    def forward(self, x: torch.Tensor, training: bool = False, return_weights: bool = False):
        if x.shape[-1] != self.config.d_model:
            raise InputError(f"expected d_model={self.config.d_model} features, got {x.shape[-1]}")
        all_weights = []
        for layer in self.layers:
            x, weights = layer(x, training=training, return_weights=True)
            all_weights.append(weights)
        return (x, all_weights) if return_weights else x
