"""Dataset loading, normalization, splitting, windowing, and missingness simulation.

Datasets are node-major multivariate series: an (S, N) value matrix with one
timestamp per row.  All model-facing values are min-max normalized per node
using statistics fitted on the training slice only.  Missingness is simulated
(independently per entry, seeded) on top of fully observed ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import InputError

DEFAULT_WINDOW = 16


@dataclass
class TimeSeriesDataset:
    name: str
    values: np.ndarray      # (S, N) float64
    timestamps: np.ndarray  # (S,) seconds, strictly increasing
    granularity: float = 1.0
    node_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] == 0:
            raise InputError(f"values must be a nonempty (S, N) array, got {self.values.shape}")
        if self.timestamps.shape != (self.values.shape[0],):
            raise InputError("one timestamp per sample row is required")
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[:5]
            raise InputError(f"non-finite values at (row, node) positions {bad.tolist()}")
        if np.any(np.diff(self.timestamps) <= 0):
            raise InputError("timestamps must be strictly increasing")
        if not self.node_names:
            self.node_names = [f"node_{i:02d}" for i in range(self.values.shape[1])]

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]


@dataclass
class NormalizationStats:
    """Per-node min and max in original units; max == min marks a degenerate node."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        self.minimum = np.asarray(self.minimum, dtype=np.float64)
        self.maximum = np.asarray(self.maximum, dtype=np.float64)
        if self.minimum.shape != self.maximum.shape or self.minimum.ndim != 1:
            raise InputError("min and max must be matching per-node vectors")
        if np.any(self.maximum < self.minimum):
            raise InputError("per-node max must be >= min")

    @property
    def degenerate(self) -> np.ndarray:
        return self.maximum == self.minimum


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2

    def __post_init__(self):
        fracs = (self.train, self.val, self.test)
        if any(f <= 0.0 for f in fracs):
            raise InputError(f"split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise InputError(f"split fractions must sum to 1, got {fracs}")


@dataclass
class MaskedWindow:
    """A (T, N) window with simulated missingness.

    ``mask`` is True where the entry is observed.  ``values`` equals
    ``targets`` at observed entries and 0 at missing ones; ``targets`` holds
    the full ground truth.
    """

    values: np.ndarray
    mask: np.ndarray
    targets: np.ndarray
    window_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if not (self.values.shape == self.mask.shape == self.targets.shape):
            raise InputError("values, mask, and targets must share one (T, N) shape")
        if self.values.ndim != 2:
            raise InputError(f"expected a (T, N) window, got shape {self.values.shape}")
        if not np.array_equal(self.values[self.mask], self.targets[self.mask]):
            raise InputError("observed values must equal targets")
        if np.any(self.values[~self.mask] != 0.0):
            raise InputError("missing entries must be zero-filled")


def load_csv(path, name: str | None = None) -> TimeSeriesDataset:
    """Load a dataset CSV: a ``timestamp`` column plus one numeric column per node.

    Timestamps may be ISO-8601 strings or integer seconds.  Any row with an
    unparseable or non-finite value is rejected; the error names the offending
    rows (1-based, counting the header as row 1).
    """
    try:
        frame = pd.read_csv(path, dtype=str)
    except FileNotFoundError:
        raise
    except Exception as exc:  # malformed CSV structure
        raise InputError(f"could not parse {path}: {exc}") from exc
    if frame.shape[0] == 0 or frame.shape[1] < 2:
        raise InputError(f"{path}: need a timestamp column plus at least one node column")
    if frame.columns[0] != "timestamp":
        raise InputError(f"{path}: first column must be named 'timestamp', got {frame.columns[0]!r}")

    ts_raw = frame.iloc[:, 0]
    ts_num = pd.to_numeric(ts_raw, errors="coerce")
    if ts_num.isna().any():
        parsed = pd.to_datetime(ts_raw, errors="coerce", format="ISO8601")
        if parsed.isna().any():
            bad = [int(i) + 2 for i in np.flatnonzero(parsed.isna().to_numpy())[:10]]
            raise InputError(f"{path}: unparseable timestamps at rows {bad}")
        timestamps = parsed.astype("int64").to_numpy() / 1e9
    else:
        timestamps = ts_num.to_numpy(dtype=np.float64)

    numeric = frame.iloc[:, 1:].apply(pd.to_numeric, errors="coerce")
    values = numeric.to_numpy(dtype=np.float64)
    bad_rows = np.flatnonzero(~np.all(np.isfinite(values), axis=1))
    if bad_rows.size:
        listed = [int(r) + 2 for r in bad_rows[:10]]
        more = "" if bad_rows.size <= 10 else f" (+{bad_rows.size - 10} more)"
        raise InputError(f"{path}: unparseable or non-finite values at rows {listed}{more}")

    diffs = np.diff(timestamps)
    granularity = float(np.median(diffs)) if diffs.size else 1.0
    return TimeSeriesDataset(
        name=name or str(path),
        values=values,
        timestamps=timestamps,
        granularity=granularity,
        node_names=list(frame.columns[1:]),
    )


def write_csv(dataset: TimeSeriesDataset, path) -> None:
    """Write a dataset in the same CSV schema that ``load_csv`` reads."""
    frame = pd.DataFrame(dataset.values, columns=dataset.node_names)
    ts = dataset.timestamps
    frame.insert(0, "timestamp", ts.astype(np.int64) if np.allclose(ts, np.round(ts)) else ts)
    frame.to_csv(path, index=False, lineterminator="\n")


def minmax_fit(train_values: np.ndarray) -> NormalizationStats:
    """Fit per-node min/max on the training slice only."""
    v = np.asarray(train_values, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] == 0:
        raise InputError(f"expected a nonempty (S, N) training slice, got {v.shape}")
    return NormalizationStats(minimum=v.min(axis=0), maximum=v.max(axis=0))


def minmax_apply(values: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Map train min to 0 and train max to 1 per node; degenerate nodes map to 0.

    Values outside the training range are not clamped.
    """
    span = stats.maximum - stats.minimum
    safe = np.where(stats.degenerate, 1.0, span)
    out = (np.asarray(values, dtype=np.float64) - stats.minimum) / safe
    return np.where(stats.degenerate, 0.0, out)


def minmax_invert(normalized: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Inverse of ``minmax_apply`` on non-degenerate nodes."""
    span = stats.maximum - stats.minimum
    return np.asarray(normalized, dtype=np.float64) * span + stats.minimum


def split_lengths(n_samples: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_train = int(math.floor(n_samples * spec.train))
    n_val = int(math.floor(n_samples * spec.val))
    return n_train, n_val, n_samples - n_train - n_val


def split(dataset: TimeSeriesDataset, spec: SplitSpec = SplitSpec()):
    """Contiguous chronological train/val/test value slices."""
    n_train, n_val, n_test = split_lengths(dataset.n_samples, spec)
    if min(n_train, n_val, n_test) < 1:
        raise InputError(f"dataset too short ({dataset.n_samples} samples) for split {spec}")
    v = dataset.values
    return v[:n_train], v[n_train : n_train + n_val], v[n_train + n_val :]


def make_windows(values: np.ndarray, length: int = DEFAULT_WINDOW, stride: int = 1) -> np.ndarray:
    """All full-length windows of ``length`` consecutive rows; final partial window dropped.

    Returns an (W, T, N) array.  Training uses stride 1; evaluation uses
    stride == length for non-overlapping windows.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise InputError(f"expected an (S, N) slice, got shape {v.shape}")
    if length < 1 or stride < 1:
        raise InputError(f"window length and stride must be >= 1, got {length}, {stride}")
    if v.shape[0] < length:
        return np.empty((0, length, v.shape[1]), dtype=np.float64)
    starts = np.arange(0, v.shape[0] - length + 1, stride)
    return np.stack([v[s : s + length] for s in starts])


def _resolve_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def mask_batch(
    targets: np.ndarray, rate: float, seed, mechanism: str = "bernoulli", block_len: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """Hide entries of a (..., T, N) target array at the given missing rate.

    ``bernoulli`` (the default, used everywhere in the evaluation protocol)
    hides each entry independently; ``block`` hides whole length-``block_len``
    time segments per node instead, with the same marginal rate.  Missing
    entries are zero-filled.  Returns (values, mask) with mask True where
    observed.
    """
    if not 0.0 < rate < 1.0:
        raise InputError(f"missing rate must lie in (0, 1), got {rate}")
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim < 2:
        raise InputError(f"expected a (..., T, N) array, got shape {t.shape}")
    rng = _resolve_rng(seed)
    if mechanism == "bernoulli":
        mask = rng.random(t.shape) >= rate
    elif mechanism == "block":
        if block_len < 1:
            raise InputError(f"block_len must be >= 1, got {block_len}")
        t_len = t.shape[-2]
        n_blocks = -(-t_len // block_len)
        segments = rng.random(t.shape[:-2] + (n_blocks, t.shape[-1])) >= rate
        mask = np.repeat(segments, block_len, axis=-2)[..., :t_len, :]
    else:
        raise InputError(f"mechanism must be 'bernoulli' or 'block', got {mechanism!r}")
    return np.where(mask, t, 0.0), mask


def apply_missing_mask(
    window: np.ndarray,
    rate: float,
    seed,
    window_id: str = "",
    mechanism: str = "bernoulli",
    block_len: int = 4,
) -> MaskedWindow:
    """Simulate missingness on one fully observed (T, N) window."""
    t = np.asarray(window, dtype=np.float64)
    if t.ndim != 2:
        raise InputError(f"expected a (T, N) window, got shape {t.shape}")
    values, mask = mask_batch(t, rate, seed, mechanism=mechanism, block_len=block_len)
    return MaskedWindow(values=values, mask=mask, targets=t, window_id=window_id)


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings for the synthetic spatio-temporal dataset."""

    coupling_neighbors: int = 3     # latent neighbours per node (symmetric support)
    coupling_low: float = 0.6
    coupling_high: float = 1.2
    slow_period_range: tuple[float, float] = (80.0, 600.0)
    fast_period_range: tuple[float, float] = (4.0, 14.0)
    fast_amplitude: float = 1.0
    ar_rho: float = 0.5
    noise_scale: float = 0.25
    scale_range: tuple[float, float] = (0.5, 3.0)
    offset_range: tuple[float, float] = (-2.0, 5.0)


def synth_generate(
    n_nodes: int,
    n_samples: int,
    seed: int,
    config: SynthConfig = SynthConfig(),
) -> tuple[TimeSeriesDataset, list[tuple[int, int, float]]]:
    """Generate correlated channels from a latent coupling graph.

    Each node carries a slow sinusoid, a fast sinusoid, and its own AR(1)
    noise process; a sparse random coupling matrix (symmetric support, so
    every node's signal is readable from its neighbours) then mixes
    neighbour signals into each channel.  Coupled channels therefore
    correlate at every frequency, including components too fast to
    interpolate from a single node's context.  Returns the dataset plus the
    latent edge list (source, target, weight) for graph-recovery
    diagnostics.
    """
    if n_nodes < 2 or n_samples < 2:
        raise InputError(f"need at least 2 nodes and 2 samples, got {n_nodes}, {n_samples}")
    rng = np.random.default_rng(seed)
    t = np.arange(n_samples, dtype=np.float64)[:, None]

    slow_p = rng.uniform(*config.slow_period_range, size=n_nodes)
    fast_p = rng.uniform(*config.fast_period_range, size=n_nodes)
    slow_phase = rng.uniform(0.0, 2.0 * np.pi, size=n_nodes)
    fast_phase = rng.uniform(0.0, 2.0 * np.pi, size=n_nodes)
    base = np.sin(2.0 * np.pi * t / slow_p + slow_phase)
    base += config.fast_amplitude * np.sin(2.0 * np.pi * t / fast_p + fast_phase)

    coupling = np.zeros((n_nodes, n_nodes))
    k = min(config.coupling_neighbors, n_nodes - 1)
    for i in range(n_nodes):
        others = np.delete(np.arange(n_nodes), i)
        picked = rng.choice(others, size=k, replace=False)
        weights = rng.uniform(config.coupling_low, config.coupling_high, size=k)
        coupling[i, picked] = np.maximum(coupling[i, picked], weights)
        coupling[picked, i] = np.maximum(coupling[picked, i], weights)

    noise = np.empty((n_samples, n_nodes))
    eps = rng.normal(0.0, config.noise_scale, size=(n_samples, n_nodes))
    noise[0] = eps[0]
    for s in range(1, n_samples):
        noise[s] = config.ar_rho * noise[s - 1] + eps[s]

    raw = base + noise
    mixed = raw + raw @ coupling.T
    scale = rng.uniform(*config.scale_range, size=n_nodes)
    offset = rng.uniform(*config.offset_range, size=n_nodes)
    values = mixed * scale + offset

    dataset = TimeSeriesDataset(
        name=f"synthetic-n{n_nodes}-s{n_samples}-seed{seed}",
        values=values,
        timestamps=np.arange(n_samples, dtype=np.float64),
        granularity=1.0,
    )
    edges = [
        (i, int(j), float(coupling[i, j]))
        for i in range(n_nodes)
        for j in np.flatnonzero(coupling[i])
    ]
    return dataset, edges
