"""Baseline imputers sharing the (values, mask) -> predictions convention.

All take (B, T, N) value/mask pairs and return (B, T, N) predictions, so the
training harness, loss, and metrics treat them interchangeably with the main
model.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .data import MaskedWindow
from .encoder import EncoderConfig, EncoderStack, positional_encoding
from .model import ModelConfig, _as_batch


class FfnImputer(nn.Module):
    """Flattened-window multilayer perceptron."""

    def __init__(self, n_nodes: int, window_len: int, config: ModelConfig = ModelConfig(kind="ffn")):
        super().__init__()
        self.n_nodes = n_nodes
        self.window_len = window_len
        flat = window_len * n_nodes
        self.hidden_in = nn.Linear(2 * flat, config.ffn_hidden)
        self.hidden_mid = nn.Linear(config.ffn_hidden, config.ffn_hidden)
        self.out = nn.Linear(config.ffn_hidden, flat)
        self.dropout = config.dropout

    def forward(self, values, mask, training: bool = False) -> torch.Tensor:
        v, m, squeezed = _as_batch(values, mask)
        b, t, n = v.shape
        x = torch.cat([v.reshape(b, -1), m.to(v.dtype).reshape(b, -1)], dim=1)
        x = F.relu(self.hidden_in(x))
        x = F.dropout(x, self.dropout, training=training)
        x = F.relu(self.hidden_mid(x))
        out = self.out(x).reshape(b, t, n)
        return out[0] if squeezed else out


class BgruImputer(nn.Module):
    """Bidirectional GRU along the time axis, weights shared across nodes."""

    def __init__(self, n_nodes: int, window_len: int, config: ModelConfig = ModelConfig(kind="bgru")):
        super().__init__()
        self.n_nodes = n_nodes
        self.window_len = window_len
        self.gru = nn.GRU(input_size=2, hidden_size=config.gru_hidden, batch_first=True, bidirectional=True)
        self.head = nn.Linear(2 * config.gru_hidden, 1)
        self.dropout = config.dropout

    def forward(self, values, mask, training: bool = False) -> torch.Tensor:
        v, m, squeezed = _as_batch(values, mask)
        b, t, n = v.shape
        seq = torch.stack([v, m.to(v.dtype)], dim=-1).permute(0, 2, 1, 3).reshape(b * n, t, 2)
        hidden, _ = self.gru(seq)
        hidden = F.dropout(hidden, self.dropout, training=training)
        out = self.head(hidden).reshape(b, n, t).permute(0, 2, 1)
        return out[0] if squeezed else out


class TransformerImputer(nn.Module):
    """Temporal encoder pipeline with the spatial attention stack removed."""

    def __init__(self, n_nodes: int, window_len: int, config: ModelConfig = ModelConfig(kind="transformer")):
        super().__init__()
        self.n_nodes = n_nodes
        self.window_len = window_len
        max_len = max(config.max_len, window_len)
        self.input_proj = nn.Linear(2, config.d_model)
        self.encoder = EncoderStack(
            EncoderConfig(
                d_model=config.d_model,
                heads=config.heads,
                d_ff=config.d_ff,
                layers=config.encoder_layers,
                dropout_rate=config.dropout,
                max_len=max_len,
            )
        )
        self.head = nn.Linear(config.d_model, 1)
        self.register_buffer("pos_table", positional_encoding(max_len, config.d_model))

    def forward(self, values, mask, training: bool = False) -> torch.Tensor:
        v, m, squeezed = _as_batch(values, mask)
        b, t, n = v.shape
        x = self.input_proj(torch.stack([v, m.to(v.dtype)], dim=-1))
        x = x.permute(0, 2, 1, 3).reshape(b * n, t, -1)
        x = x + self.pos_table[:t].to(x.dtype)
        x = self.encoder(x, training=training)
        out = self.head(x).reshape(b, n, t).permute(0, 2, 1)
        return out[0] if squeezed else out


def mean_impute_reference(window: MaskedWindow) -> np.ndarray:
    """Floor baseline: each missing entry gets its node's observed within-window
    mean, or 0.5 when the node has no observed entry at all."""
    pred, _ = _mean_impute_batch(window.values[None], window.mask[None])
    return pred[0]


def _mean_impute_batch(values: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    counts = mask.sum(axis=-2, keepdims=True)
    sums = np.where(mask, values, 0.0).sum(axis=-2, keepdims=True)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.5)
    pred = np.broadcast_to(means, values.shape).copy()
    return pred, counts


class MeanImputeReference:
    """Callable wrapper so the reference plugs into the evaluation loop."""

    def __call__(self, values, mask, training: bool = False) -> torch.Tensor:
        v = values.cpu().numpy() if torch.is_tensor(values) else np.asarray(values, dtype=np.float64)
        m = mask.cpu().numpy() if torch.is_tensor(mask) else np.asarray(mask, dtype=bool)
        pred, _ = _mean_impute_batch(v, m.astype(bool))
        return torch.as_tensor(pred, dtype=torch.float32)

    def eval(self):
        return self
