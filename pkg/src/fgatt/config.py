"""Run configuration: JSON schema, validation, and dataclass assembly.

A run config is a single JSON object; every key is optional and falls back to
the package defaults, but unknown keys are rejected.  CLI flags override
config-file values after validation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import jsonschema

from .data import SynthConfig, TimeSeriesDataset, load_csv, synth_generate
from .errors import ConfigError, InputError
from .graph import POOLING_METHODS, TOPK_MODES, GraphConfig
from .harness import DEFAULT_RATES, TrainConfig
from .model import MODEL_KINDS, ModelConfig

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_RATE = {"type": "number", "exclusiveMinimum": 0.0, "exclusiveMaximum": 1.0}

RUN_CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "fgatt run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "synthetic": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "nodes": {"type": "integer", "minimum": 2},
                        "samples": {"type": "integer", "minimum": 2},
                        "seed": {"type": "integer"},
                    },
                },
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(MODEL_KINDS)},
                "d_model": _POSITIVE_INT,
                "fgat_blocks": _POSITIVE_INT,
                "encoder_layers": _POSITIVE_INT,
                "heads": _POSITIVE_INT,
                "d_ff": _POSITIVE_INT,
                "dropout": {"type": "number", "minimum": 0.0, "exclusiveMaximum": 1.0},
                "leaky_slope": {"type": "number", "exclusiveMinimum": 0.0},
                "max_len": _POSITIVE_INT,
                "ffn_hidden": _POSITIVE_INT,
                "gru_hidden": _POSITIVE_INT,
            },
        },
        "graph": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number", "minimum": 0.0, "maximum": 1.0},
                "sigma": {"type": "number", "exclusiveMinimum": 0.0},
                "k": _POSITIVE_INT,
                "pooling": {"enum": list(POOLING_METHODS)},
                "topk_mode": {"enum": list(TOPK_MODES)},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epochs": _POSITIVE_INT,
                "batch_size": _POSITIVE_INT,
                "learning_rate": {"type": "number", "exclusiveMinimum": 0.0},
                "patience": _POSITIVE_INT,
                "seed": {"type": "integer"},
                "missing_rate": _RATE,
                "window": _POSITIVE_INT,
                "train_stride": _POSITIVE_INT,
                "device": {"type": "string"},
            },
        },
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rates": {"type": "array", "items": _RATE, "minItems": 1},
                "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "models": {"type": "array", "items": {"enum": list(MODEL_KINDS)}, "minItems": 1},
                "include_reference": {"type": "boolean"},
            },
        },
        "out": {"type": "string"},
    },
}


@dataclass(frozen=True)
class SyntheticSpec:
    nodes: int = 12
    samples: int = 4000
    seed: int = 7


@dataclass(frozen=True)
class DatasetSpec:
    path: str | None = None
    synthetic: SyntheticSpec = SyntheticSpec()

    def load(self) -> TimeSeriesDataset:
        if self.path is not None:
            return load_csv(self.path)
        s = self.synthetic
        dataset, _ = synth_generate(s.nodes, s.samples, s.seed, SynthConfig())
        return dataset


@dataclass
class RunConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval_rates: tuple[float, ...] = DEFAULT_RATES
    eval_seeds: tuple[int, ...] = (0, 1, 2)
    sweep_models: tuple[str, ...] = ("fgatt", "ffn", "bgru", "transformer")
    include_reference: bool = True
    out: str | None = None

    def to_json_dict(self) -> dict:
        out = {
            "dataset": (
                {"path": self.dataset.path}
                if self.dataset.path is not None
                else {"synthetic": asdict(self.dataset.synthetic)}
            ),
            "model": asdict(self.model),
            "graph": asdict(self.graph),
            "train": asdict(self.train),
            "eval": {"rates": list(self.eval_rates), "seeds": list(self.eval_seeds)},
            "sweep": {"models": list(self.sweep_models), "include_reference": self.include_reference},
        }
        if self.out is not None:
            out["out"] = self.out
        return out


def validate_config_dict(raw: dict) -> None:
    """Schema-validate a raw config dict; errors carry the offending field path."""
    try:
        jsonschema.validate(raw, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config at {exc.json_path}: {exc.message}") from exc


def config_from_dict(raw: dict) -> RunConfig:
    validate_config_dict(raw)
    ds_raw = raw.get("dataset", {})
    if "path" in ds_raw and "synthetic" in ds_raw:
        raise ConfigError("invalid config at $.dataset: give either 'path' or 'synthetic', not both")
    dataset = DatasetSpec(
        path=ds_raw.get("path"),
        synthetic=SyntheticSpec(**ds_raw.get("synthetic", {})),
    )
    eval_raw = raw.get("eval", {})
    sweep_raw = raw.get("sweep", {})
    return RunConfig(
        dataset=dataset,
        model=ModelConfig(**raw.get("model", {})),
        graph=GraphConfig(**raw.get("graph", {})),
        train=TrainConfig(**raw.get("train", {})),
        eval_rates=tuple(eval_raw.get("rates", DEFAULT_RATES)),
        eval_seeds=tuple(eval_raw.get("seeds", (0, 1, 2))),
        sweep_models=tuple(sweep_raw.get("models", ("fgatt", "ffn", "bgru", "transformer"))),
        include_reference=sweep_raw.get("include_reference", True),
        out=raw.get("out"),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return config_from_dict(raw)
