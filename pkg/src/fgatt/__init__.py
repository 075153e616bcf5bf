"""Spatio-temporal missing-data imputation with fuzzy-rough dynamic graphs,
graph attention, and a Transformer temporal encoder."""

from .data import (
    MaskedWindow,
    NormalizationStats,
    SplitSpec,
    SynthConfig,
    TimeSeriesDataset,
    apply_missing_mask,
    load_csv,
    make_windows,
    minmax_apply,
    minmax_fit,
    minmax_invert,
    split,
    synth_generate,
)
from .encoder import EncoderConfig, EncoderStack, positional_encoding, scaled_dot_attention
from .errors import ConfigError, InputError, TrainingDiverged
from .fgat import FgatBlock, GraphAttention, layer_norm
from .fuzzy_rough import (
    Kernel,
    fuzzy_lower_approx,
    fuzzy_upper_approx,
    kernel_similarity,
    node_membership,
)
from .graph import (
    DynamicGraph,
    GraphConfig,
    build_graph,
    construct_window_graph,
    pool_scores,
    score_at_t,
    score_matrix_at_t,
)
from .harness import MetricsReport, MetricsRow, TrainConfig, evaluate, mae, mse, rmse, sweep, train
from .model import FgattModel, ModelConfig, build_model, impute, load_checkpoint, masked_mse_loss, save_checkpoint

__version__ = "0.1.0"
