"""End-to-end imputation model: masking-aware embedding, dynamic graph,
spatial attention blocks per timestep, temporal encoder per node, and a
scalar reconstruction head.

The spatial stack shares parameters across timesteps and the temporal encoder
shares parameters across nodes.  The dynamic graph is rebuilt per window from
the raw masked values, outside the autograd graph.
"""

from __future__ import annotations

import pickle
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from .data import MaskedWindow, NormalizationStats
from .encoder import EncoderConfig, EncoderStack, positional_encoding
from .errors import ConfigError, InputError
from .fgat import FgatBlock
from .graph import GraphConfig, batch_neighbor_indices

CHECKPOINT_FORMAT = "fgatt-checkpoint-v1"

MODEL_KINDS = ("fgatt", "ffn", "bgru", "transformer")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture sizes shared by the imputer and its baselines."""

    kind: str = "fgatt"
    d_model: int = 64
    fgat_blocks: int = 2
    encoder_layers: int = 2
    heads: int = 4
    d_ff: int = 256
    dropout: float = 0.1
    leaky_slope: float = 0.01
    max_len: int = 512
    ffn_hidden: int = 256
    gru_hidden: int = 64

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if min(self.d_model, self.fgat_blocks, self.encoder_layers, self.ffn_hidden, self.gru_hidden) < 1:
            raise ConfigError(f"all model sizes must be positive: {self}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")


def _as_batch(values, mask) -> tuple[torch.Tensor, torch.Tensor, bool]:
    v = values if torch.is_tensor(values) else torch.as_tensor(np.asarray(values), dtype=torch.float32)
    m = mask if torch.is_tensor(mask) else torch.as_tensor(np.asarray(mask))
    m = m.bool()
    if v.shape != m.shape:
        raise InputError(f"values and mask shapes differ: {tuple(v.shape)} vs {tuple(m.shape)}")
    squeezed = v.dim() == 2
    if squeezed:
        v, m = v[None], m[None]
    if v.dim() != 3:
        raise InputError(f"expected (T, N) or (B, T, N) input, got shape {tuple(v.shape)}")
    return v, m, squeezed


class FgattModel(nn.Module):
    """Fuzzy graph attention + Transformer imputer over (B, T, N) windows."""

    def __init__(self, n_nodes: int, window_len: int, config: ModelConfig = ModelConfig(), graph: GraphConfig = GraphConfig()):
        super().__init__()
        if n_nodes < 2:
            raise ConfigError(f"need at least 2 nodes, got {n_nodes}")
        max_len = max(config.max_len, window_len)
        self.n_nodes = n_nodes
        self.window_len = window_len
        self.config = config
        self.graph_config = graph
        self.input_proj = nn.Linear(2, config.d_model)
        self.spatial = nn.ModuleList(
            FgatBlock(config.d_model, config.dropout, config.leaky_slope) for _ in range(config.fgat_blocks)
        )
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

    def neighbors_for(self, values: torch.Tensor) -> torch.Tensor:
        """Per-window attention neighbourhoods from the raw masked values.

        Built outside autograd: topology selection is not differentiated.
        """
        arr = values.detach().cpu().numpy().astype(np.float64)
        return torch.as_tensor(batch_neighbor_indices(arr, self.graph_config), dtype=torch.int64, device=values.device)

    def forward(self, values, mask, training: bool = False) -> torch.Tensor:
        v, m, squeezed = _as_batch(values, mask)
        b, t, n = v.shape
        if n != self.n_nodes:
            raise ConfigError(f"model built for {self.n_nodes} nodes, got {n}")
        if t > self.pos_table.shape[0]:
            raise ConfigError(f"window length {t} exceeds max_len {self.pos_table.shape[0]}")
        x = self.input_proj(torch.stack([v, m.to(v.dtype)], dim=-1))     # (B, T, N, D)
        neighbors = self.neighbors_for(v)
        for block in self.spatial:
            x = block(x, neighbors, training=training)
        x = x.permute(0, 2, 1, 3).reshape(b * n, t, -1)                  # per node along time
        x = x + self.pos_table[:t].to(x.dtype)
        x = self.encoder(x, training=training)
        x = x.reshape(b, n, t, -1).permute(0, 2, 1, 3)
        out = self.head(x).squeeze(-1)
        return out[0] if squeezed else out


def masked_mse_loss(pred: torch.Tensor, targets, mask) -> torch.Tensor:
    """Mean squared error over missing entries only."""
    t = targets if torch.is_tensor(targets) else torch.as_tensor(np.asarray(targets), dtype=pred.dtype)
    m = mask if torch.is_tensor(mask) else torch.as_tensor(np.asarray(mask))
    m = m.bool()
    if pred.shape != t.shape or pred.shape != m.shape:
        raise InputError(f"shape mismatch: pred {tuple(pred.shape)}, targets {tuple(t.shape)}, mask {tuple(m.shape)}")
    missing = ~m
    if not bool(missing.any()):
        raise InputError("loss needs at least one missing entry")
    diff = (pred - t.to(pred.dtype))[missing]
    return (diff * diff).mean()


def impute(window: MaskedWindow, model: nn.Module) -> np.ndarray:
    """Complete one window: observed entries copied, missing entries predicted.

    Predictions are clamped to the normalized range [0, 1]; observed entries
    pass through untouched.
    """
    with torch.no_grad():
        pred = model(
            torch.as_tensor(window.values, dtype=torch.float32),
            torch.as_tensor(window.mask),
            training=False,
        )
    filled = np.clip(pred.cpu().numpy().astype(np.float64), 0.0, 1.0)
    return np.where(window.mask, window.values, filled)


def build_model(kind: str, n_nodes: int, window_len: int, config: ModelConfig, graph: GraphConfig) -> nn.Module:
    """Instantiate any supported model kind with the shared conventions."""
    from . import baselines

    if kind == "fgatt":
        return FgattModel(n_nodes, window_len, config, graph)
    if kind == "ffn":
        return baselines.FfnImputer(n_nodes, window_len, config)
    if kind == "bgru":
        return baselines.BgruImputer(n_nodes, window_len, config)
    if kind == "transformer":
        return baselines.TransformerImputer(n_nodes, window_len, config)
    raise ConfigError(f"model kind must be one of {MODEL_KINDS}, got {kind!r}")


def save_checkpoint(path, model: nn.Module, kind: str, config: ModelConfig, graph: GraphConfig, stats: NormalizationStats, extra: dict | None = None) -> None:
    """Write a single self-describing archive: format tag, configs, parameter
    arrays, and normalization statistics."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "kind": kind,
        "n_nodes": model.n_nodes,
        "window_len": model.window_len,
        "model_config": asdict(config),
        "graph_config": asdict(graph),
        "params": {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()},
        "norm_stats": {"minimum": stats.minimum, "maximum": stats.maximum},
        "extra": extra or {},
    }
    with open(path, "wb") as fh:
        pickle.dump(payload, fh, protocol=4)


def load_checkpoint(path) -> tuple[nn.Module, NormalizationStats, dict]:
    """Rebuild a model (in eval state) plus its normalization stats from disk."""
    with open(path, "rb") as fh:
        payload = pickle.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise InputError(f"{path}: unsupported checkpoint format {payload.get('format')!r}")
    config = ModelConfig(**payload["model_config"])
    graph = GraphConfig(**payload["graph_config"])
    model = build_model(payload["kind"], payload["n_nodes"], payload["window_len"], config, graph)
    model.load_state_dict({k: torch.as_tensor(v) for k, v in payload["params"].items()})
    stats = NormalizationStats(**payload["norm_stats"])
    return model, stats, payload
