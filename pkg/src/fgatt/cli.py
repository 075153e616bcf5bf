"""Command-line entry point.

Subcommands: synth, graph, train, evaluate, sweep.  Every command accepts
``--config <file>`` (JSON, validated against the run-config schema),
``--seed``, and ``--out <dir>``; flags override config-file values.  Output
files land in the chosen directory (default: runs/<confighash>-<timestamp>).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

from .config import RunConfig, SyntheticSpec, load_config
from .data import (
    SynthConfig,
    apply_missing_mask,
    make_windows,
    minmax_apply,
    minmax_fit,
    split,
    synth_generate,
    write_csv,
)
from .errors import ConfigError, InputError, TrainingDiverged
from .graph import DynamicGraph, construct_window_graph
from .harness import MetricsReport, evaluate, plot_report, prepare, sweep, train_prepared
from .model import load_checkpoint, save_checkpoint


def _parse_rates(text: str) -> tuple[float, ...]:
    rates = []
    for tok in text.split(","):
        val = float(tok)
        rates.append(val / 100.0 if val > 1.0 else val)
    return tuple(rates)


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(","))


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "data", None):
        cfg.dataset = dataclasses.replace(cfg.dataset, path=args.data)
    if getattr(args, "model", None):
        cfg.model = dataclasses.replace(cfg.model, kind=args.model)
    if getattr(args, "epochs", None) is not None:
        cfg.train = dataclasses.replace(cfg.train, epochs=args.epochs)
    if getattr(args, "batch_size", None) is not None:
        cfg.train = dataclasses.replace(cfg.train, batch_size=args.batch_size)
    if getattr(args, "lr", None) is not None:
        cfg.train = dataclasses.replace(cfg.train, learning_rate=args.lr)
    if getattr(args, "rate", None) is not None:
        cfg.train = dataclasses.replace(cfg.train, missing_rate=args.rate)
    if getattr(args, "rates", None) is not None:
        cfg.eval_rates = args.rates
    if getattr(args, "seeds", None) is not None:
        cfg.eval_seeds = args.seeds
    if getattr(args, "models", None):
        cfg.sweep_models = tuple(args.models.split(","))
    if args.seed is not None:
        cfg.train = dataclasses.replace(cfg.train, seed=args.seed)
        cfg.eval_seeds = (args.seed,)
        cfg.dataset = dataclasses.replace(cfg.dataset, synthetic=dataclasses.replace(cfg.dataset.synthetic, seed=args.seed))
    if args.out:
        cfg.out = args.out
    return cfg


def _out_dir(cfg: RunConfig) -> str:
    if cfg.out:
        path = cfg.out
    else:
        digest = hashlib.sha256(json.dumps(cfg.to_json_dict(), sort_keys=True).encode()).hexdigest()[:12]
        path = os.path.join("runs", f"{digest}-{time.strftime('%Y%m%d-%H%M%S')}")
    os.makedirs(path, exist_ok=True)
    return path


def _write_resolved_config(cfg: RunConfig, out: str) -> None:
    with open(os.path.join(out, "resolved_config.json"), "w") as fh:
        json.dump(cfg.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_log(log: list[dict], path: str) -> None:
    with open(path, "w") as fh:
        for record in log:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def cmd_synth(args) -> int:
    cfg = _resolve_config(args)
    spec = cfg.dataset.synthetic
    if args.nodes or args.samples:
        spec = SyntheticSpec(
            nodes=args.nodes or spec.nodes,
            samples=args.samples or spec.samples,
            seed=spec.seed,
        )
    out = _out_dir(cfg)
    dataset, edges = synth_generate(spec.nodes, spec.samples, spec.seed, SynthConfig())
    data_path = os.path.join(out, "synthetic.csv")
    graph_path = os.path.join(out, "latent_graph.csv")
    write_csv(dataset, data_path)
    DynamicGraph(node_count=spec.nodes, edges=edges, built_from=dataset.name).write_csv(graph_path)
    print(f"wrote {data_path} ({spec.samples} samples x {spec.nodes} nodes) and {graph_path}")
    return 0


def cmd_graph(args) -> int:
    cfg = _resolve_config(args)
    dataset = cfg.dataset.load()
    out = _out_dir(cfg)
    train_v, _, _ = split(dataset)
    stats = minmax_fit(train_v)
    windows = make_windows(minmax_apply(train_v, stats), cfg.train.window, cfg.train.window)
    if not 0 <= args.start < windows.shape[0]:
        raise InputError(f"--start must be in [0, {windows.shape[0] - 1}], got {args.start}")
    rate = args.rate if args.rate is not None else cfg.train.missing_rate
    window = apply_missing_mask(windows[args.start], rate, cfg.train.seed, window_id=f"train-window-{args.start}")
    graph = construct_window_graph(window, cfg.graph)
    path = os.path.join(out, "window_graph.csv")
    graph.write_csv(path)
    print(f"wrote {path} ({len(graph.edges)} edges over {graph.node_count} nodes)")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    dataset = cfg.dataset.load()
    out = _out_dir(cfg)
    _write_resolved_config(cfg, out)
    prepared = prepare(dataset, cfg.train)
    model, log = train_prepared(cfg.model.kind, prepared, cfg.model, cfg.graph, cfg.train)
    ckpt_path = os.path.join(out, "checkpoint.ckpt")
    save_checkpoint(
        ckpt_path,
        model,
        cfg.model.kind,
        cfg.model,
        cfg.graph,
        prepared.stats,
        extra={"dataset": dataset.name, "seed": cfg.train.seed},
    )
    _write_log(log, os.path.join(out, "train_log.jsonl"))
    best = min(r["val_loss"] for r in log)
    print(f"trained {cfg.model.kind} for {len(log)} epochs (best val loss {best:.6f}); wrote {ckpt_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    model, stats, payload = load_checkpoint(args.checkpoint)
    dataset = cfg.dataset.load()
    if dataset.n_nodes != payload["n_nodes"]:
        raise InputError(
            f"checkpoint was trained on {payload['n_nodes']} nodes but {dataset.name} has {dataset.n_nodes}"
        )
    out = _out_dir(cfg)
    train_v, _, test_v = split(dataset)
    window = payload["window_len"]
    test_windows = make_windows(minmax_apply(test_v, stats), window, window)
    if test_windows.shape[0] == 0:
        raise InputError(f"test slice too short for window length {window}")
    report = MetricsReport()
    for seed in cfg.eval_seeds:
        for rate in cfg.eval_rates:
            stem = None
            if args.dump_predictions:
                stem = os.path.join(out, f"{payload['kind']}_rate{int(round(rate * 100))}_seed{seed}")
            report.add(
                evaluate(model, test_windows, rate, seed, payload["kind"], dump_stem=stem, exclude_nodes=stats.degenerate)
            )
    path = os.path.join(out, "metrics.csv")
    report.write_csv(path)
    print(f"wrote {path} ({len(report.rows)} evaluation cells)")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    dataset = cfg.dataset.load()
    out = _out_dir(cfg)
    _write_resolved_config(cfg, out)
    report, logs = sweep(
        dataset,
        list(cfg.sweep_models),
        cfg.model,
        cfg.graph,
        cfg.train,
        rates=cfg.eval_rates,
        seeds=cfg.eval_seeds,
        include_reference=cfg.include_reference,
    )
    path = os.path.join(out, "metrics.csv")
    report.write_csv(path)
    for name, log in sorted(logs.items()):
        _write_log(log, os.path.join(out, f"train_log_{name}.jsonl"))
    plots = plot_report(report, out, dataset_name=dataset.name)
    print(f"wrote {path}, {len(logs)} training logs, and plots: {', '.join(os.path.basename(p) for p in plots)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgatt",
        description="Spatio-temporal imputation with fuzzy-rough dynamic graphs, graph attention, and a Transformer encoder.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run config; validated against the published schema")
        p.add_argument("--seed", type=int, default=None, help="run seed (overrides config seeds)")
        p.add_argument("--out", help="output directory (default: runs/<confighash>-<timestamp>)")

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV plus its latent-graph CSV")
    common(p)
    p.add_argument("--nodes", type=int, help="number of sensor channels")
    p.add_argument("--samples", type=int, help="number of timesteps")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("graph", help="export the dynamic graph of one training window as an edge-list CSV")
    common(p)
    p.add_argument("--data", help="dataset CSV path (default: config dataset)")
    p.add_argument("--start", type=int, default=0, help="index of the training window to export")
    p.add_argument("--rate", type=float, default=None, help="missing rate applied before graph construction")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("train", help="train one model and write a checkpoint plus a JSONL training log")
    common(p)
    p.add_argument("--data", help="dataset CSV path (default: config dataset)")
    p.add_argument("--model", choices=["fgatt", "ffn", "bgru", "transformer"], help="model kind")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--rate", type=float, help="training missing rate")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint over missing rates and write a metrics CSV")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="dataset CSV path (default: config dataset)")
    p.add_argument("--rates", type=_parse_rates, help="comma list, percents or fractions (e.g. 20,50,80)")
    p.add_argument("--seeds", type=_parse_ints, help="comma list of evaluation mask seeds")
    p.add_argument("--dump-predictions", action="store_true", help="also write raw prediction arrays (.npy)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train models across seeds, evaluate over all rates, emit CSV and plots")
    common(p)
    p.add_argument("--data", help="dataset CSV path (default: config dataset)")
    p.add_argument("--models", help="comma list of model kinds")
    p.add_argument("--rates", type=_parse_rates, help="comma list, percents or fractions")
    p.add_argument("--seeds", type=_parse_ints, help="comma list of training seeds")
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError, FileNotFoundError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
