"""Training loop, metrics, and the missing-rate sweep.

Training hides entries at a fixed rate (default 50%) with fresh masks every
epoch, minimises masked MSE with Adam, and early-stops on validation loss.
Evaluation re-masks the held-out test windows at each requested rate with a
seed-fixed mask and scores predictions on the missing entries only.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from .baselines import MeanImputeReference
from .data import (
    DEFAULT_WINDOW,
    SplitSpec,
    TimeSeriesDataset,
    make_windows,
    mask_batch,
    minmax_apply,
    minmax_fit,
    split,
)
from .errors import ConfigError, InputError, TrainingDiverged
from .graph import GraphConfig
from .model import ModelConfig, build_model, masked_mse_loss

DEFAULT_RATES = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
REFERENCE_NAME = "mean"

# Stream tags keep the train/val/eval mask draws independent of each other.
_TRAIN_STREAM, _VAL_STREAM, _EVAL_STREAM, _SHUFFLE_STREAM = 101, 202, 303, 404


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    patience: int = 10
    seed: int = 0
    missing_rate: float = 0.5
    window: int = DEFAULT_WINDOW
    train_stride: int = 1
    device: str = "cpu"

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.patience, self.window, self.train_stride) < 1:
            raise ConfigError(f"epochs, batch size, patience, window, stride must be >= 1: {self}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.missing_rate < 1.0:
            raise ConfigError(f"missing rate must lie in (0, 1), got {self.missing_rate}")


@dataclass(frozen=True)
class MetricsRow:
    model: str
    missing_rate: float
    mse: float
    mae: float
    rmse: float
    seed: int

    def __post_init__(self):
        if min(self.mse, self.mae, self.rmse) < 0:
            raise InputError(f"metrics must be nonnegative: {self}")
        if abs(self.rmse - math.sqrt(self.mse)) > 1e-9:
            raise InputError(f"rmse must equal sqrt(mse): {self}")


@dataclass
class MetricsReport:
    """Long-format metric table, one (model, rate, seed) cell per three rows."""

    rows: list[MetricsRow] = field(default_factory=list)

    def add(self, row: MetricsRow) -> None:
        self.rows.append(row)

    def long_records(self) -> list[tuple[str, int, str, float, int]]:
        records = []
        for r in self.rows:
            pct = int(round(r.missing_rate * 100))
            for metric in ("mse", "mae", "rmse"):
                records.append((r.model, pct, metric, getattr(r, metric), r.seed))
        return records

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["model", "missing_rate", "metric", "value", "seed"])
            for model, pct, metric, value, seed in self.long_records():
                writer.writerow([model, pct, metric, repr(float(value)), seed])

    def mean_metric(self, model: str, metric: str, rates=None) -> float:
        vals = [
            getattr(r, metric)
            for r in self.rows
            if r.model == model and (rates is None or any(abs(r.missing_rate - x) < 1e-9 for x in rates))
        ]
        if not vals:
            raise InputError(f"no rows for model {model!r}")
        return float(np.mean(vals))


def _metric_arrays(pred, targets, mask):
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if not (p.shape == t.shape == m.shape):
        raise InputError(f"shape mismatch: {p.shape}, {t.shape}, {m.shape}")
    missing = ~m
    if not missing.any():
        raise InputError("metrics need at least one missing entry")
    return p[missing], t[missing]


def mse(pred, targets, mask) -> float:
    """Mean squared error over missing entries."""
    p, t = _metric_arrays(pred, targets, mask)
    return float(np.mean((p - t) ** 2))


def mae(pred, targets, mask) -> float:
    """Mean absolute error over missing entries."""
    p, t = _metric_arrays(pred, targets, mask)
    return float(np.mean(np.abs(p - t)))


def rmse(pred, targets, mask) -> float:
    """Root mean squared error over missing entries."""
    return math.sqrt(mse(pred, targets, mask))


@dataclass
class PreparedData:
    """Normalized, windowed train/val/test arrays plus the fitted statistics."""

    train_windows: np.ndarray
    val_windows: np.ndarray
    test_windows: np.ndarray
    stats: object
    n_nodes: int
    window: int


def prepare(dataset: TimeSeriesDataset, train_cfg: TrainConfig, split_spec: SplitSpec = SplitSpec()) -> PreparedData:
    """Split chronologically, fit normalization on train only, and window each slice.

    Train windows use the configured stride; validation and test windows are
    non-overlapping (stride == window length).
    """
    train_v, val_v, test_v = split(dataset, split_spec)
    stats = minmax_fit(train_v)
    w = train_cfg.window
    prepared = PreparedData(
        train_windows=make_windows(minmax_apply(train_v, stats), w, train_cfg.train_stride),
        val_windows=make_windows(minmax_apply(val_v, stats), w, w),
        test_windows=make_windows(minmax_apply(test_v, stats), w, w),
        stats=stats,
        n_nodes=dataset.n_nodes,
        window=w,
    )
    for name, arr in (("train", prepared.train_windows), ("val", prepared.val_windows), ("test", prepared.test_windows)):
        if arr.shape[0] == 0:
            raise InputError(f"{name} slice too short for window length {w}")
    return prepared


def _forward_batched(model, values: np.ndarray, mask: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """No-grad predictions for a (W, T, N) stack, chunked to bound memory."""
    outs = []
    with torch.no_grad():
        for lo in range(0, values.shape[0], batch_size):
            v = torch.as_tensor(values[lo : lo + batch_size], dtype=torch.float32)
            m = torch.as_tensor(mask[lo : lo + batch_size])
            outs.append(model(v, m, training=False).cpu().numpy().astype(np.float64))
    return np.concatenate(outs, axis=0)


def train_prepared(kind: str, prepared: PreparedData, model_cfg: ModelConfig, graph_cfg: GraphConfig, train_cfg: TrainConfig):
    """Train one model on prepared data; returns (model, per-epoch log).

    Fresh Bernoulli masks are drawn every epoch for the training windows; the
    validation mask is fixed per seed.  The best-validation parameters are
    restored before returning.
    """
    torch.manual_seed(train_cfg.seed)
    model = build_model(kind, prepared.n_nodes, prepared.window, model_cfg, graph_cfg)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.learning_rate)

    val_values, val_mask = mask_batch(
        prepared.val_windows, train_cfg.missing_rate, np.random.default_rng([train_cfg.seed, _VAL_STREAM])
    )
    n_windows = prepared.train_windows.shape[0]
    log: list[dict] = []
    best_loss, best_state, best_epoch = math.inf, None, -1

    for epoch in range(train_cfg.epochs):
        tr_values, tr_mask = mask_batch(
            prepared.train_windows, train_cfg.missing_rate, np.random.default_rng([train_cfg.seed, _TRAIN_STREAM, epoch])
        )
        order = np.random.default_rng([train_cfg.seed, _SHUFFLE_STREAM, epoch]).permutation(n_windows)
        batch_losses = []
        for lo in range(0, n_windows, train_cfg.batch_size):
            sel = order[lo : lo + train_cfg.batch_size]
            v = torch.as_tensor(tr_values[sel], dtype=torch.float32)
            m = torch.as_tensor(tr_mask[sel])
            t = torch.as_tensor(prepared.train_windows[sel], dtype=torch.float32)
            pred = model(v, m, training=True)
            loss = masked_mse_loss(pred, t, m)
            if not torch.isfinite(loss):
                raise TrainingDiverged(f"{kind}: non-finite loss at epoch {epoch}, batch start {lo}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch_losses.append(loss.item())

        val_pred = _forward_batched(model, val_values, val_mask)
        val_loss = mse(val_pred, prepared.val_windows, val_mask)
        if not math.isfinite(val_loss):
            raise TrainingDiverged(f"{kind}: non-finite validation loss at epoch {epoch}")
        log.append({"epoch": epoch, "train_loss": float(np.mean(batch_losses)), "val_loss": val_loss})
        if val_loss < best_loss:
            best_loss, best_epoch = val_loss, epoch
            best_state = copy.deepcopy(model.state_dict())
        elif epoch - best_epoch >= train_cfg.patience:
            break

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return model, log


def train(kind: str, dataset: TimeSeriesDataset, model_cfg: ModelConfig, graph_cfg: GraphConfig, train_cfg: TrainConfig, split_spec: SplitSpec = SplitSpec()):
    """Prepare the dataset and train one model; returns (model, stats, log)."""
    prepared = prepare(dataset, train_cfg, split_spec)
    model, log = train_prepared(kind, prepared, model_cfg, graph_cfg, train_cfg)
    return model, prepared.stats, log


def evaluate(
    model, test_windows: np.ndarray, rate: float, seed: int, model_name: str, dump_stem=None, exclude_nodes=None
) -> MetricsRow:
    """Score one model at one missing rate on seed-fixed masks.

    ``exclude_nodes`` drops the flagged (degenerate) sensor columns from the
    aggregation; the model still sees them.  ``dump_stem`` optionally writes
    ``<stem>_{pred,target,mask}.npy`` so the metrics can be recomputed
    independently from the raw predictions.
    """
    values, mask = mask_batch(
        test_windows, rate, np.random.default_rng([seed, _EVAL_STREAM, int(round(rate * 100))])
    )
    pred = _forward_batched(model, values, mask)
    targets = test_windows
    if exclude_nodes is not None and np.any(exclude_nodes):
        keep = ~np.asarray(exclude_nodes, dtype=bool)
        if not keep.any():
            raise InputError("all nodes are excluded from metric aggregation")
        pred, targets, mask = pred[..., keep], targets[..., keep], mask[..., keep]
    if dump_stem is not None:
        np.save(f"{dump_stem}_pred.npy", pred)
        np.save(f"{dump_stem}_target.npy", targets)
        np.save(f"{dump_stem}_mask.npy", mask)
    m = mse(pred, targets, mask)
    return MetricsRow(
        model=model_name,
        missing_rate=rate,
        mse=m,
        mae=mae(pred, targets, mask),
        rmse=math.sqrt(m),
        seed=seed,
    )


def sweep(
    dataset: TimeSeriesDataset,
    kinds: list[str],
    model_cfg: ModelConfig,
    graph_cfg: GraphConfig,
    train_cfg: TrainConfig,
    rates=DEFAULT_RATES,
    seeds=(0, 1, 2),
    split_spec: SplitSpec = SplitSpec(),
    include_reference: bool = True,
    dump_dir=None,
):
    """Train every (kind, seed) cell once and evaluate it at every missing rate.

    Returns (report, logs) where logs maps "kind_seed" to the training log.
    The optional mean-impute reference is appended as pseudo-model "mean".
    """
    if not kinds:
        raise ConfigError("sweep needs at least one model kind")
    report = MetricsReport()
    logs: dict[str, list[dict]] = {}
    prepared = prepare(dataset, train_cfg, split_spec)
    all_kinds = list(kinds) + ([REFERENCE_NAME] if include_reference else [])
    for kind in all_kinds:
        for seed in seeds:
            if kind == REFERENCE_NAME:
                model = MeanImputeReference()
            else:
                cfg = replace(train_cfg, seed=seed)
                model, logs[f"{kind}_{seed}"] = train_prepared(kind, prepared, model_cfg, graph_cfg, cfg)
            for rate in rates:
                stem = None
                if dump_dir is not None:
                    stem = f"{dump_dir}/{kind}_rate{int(round(rate * 100))}_seed{seed}"
                report.add(
                    evaluate(
                        model,
                        prepared.test_windows,
                        rate,
                        seed,
                        kind,
                        dump_stem=stem,
                        exclude_nodes=prepared.stats.degenerate,
                    )
                )
    return report, logs


def plot_report(report: MetricsReport, out_dir, dataset_name: str = "") -> list[str]:
    """One metric-vs-missing-rate figure per metric, models as series.

    Curves show the across-seed mean with a +-1 std band.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    models = sorted({r.model for r in report.rows})
    for metric in ("mse", "mae", "rmse"):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for name in models:
            pts: dict[int, list[float]] = {}
            for r in report.rows:
                if r.model == name:
                    pts.setdefault(int(round(r.missing_rate * 100)), []).append(getattr(r, metric))
            xs = sorted(pts)
            means = np.array([np.mean(pts[x]) for x in xs])
            stds = np.array([np.std(pts[x]) for x in xs])
            ax.plot(xs, means, marker="o", label=name)
            if np.any(stds > 0):
                ax.fill_between(xs, means - stds, means + stds, alpha=0.15)
        ax.set_xlabel("missing rate (%)")
        ax.set_ylabel(metric.upper())
        title = f"{metric.upper()} vs missing rate"
        if dataset_name:
            title += f" ({dataset_name})"
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        path = f"{out_dir}/plot_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
