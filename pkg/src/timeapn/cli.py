"""Command-line entry point.

Machine-readable JSON goes to stdout; human-aligned tables and
diagnostics go to stderr. Exit code 0 on success, nonzero on any error,
and errors never leave partial JSON on stdout. All randomness flows
from --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, parse_config_text
from .data import Dataset, SynthSpec, generate_synthetic, load_csv, split_standardize, write_csv
from .series import make_windows
from .train import build_state, evaluate, predict_batch, train_model

__all__ = ["main"]


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_envelope(text: str) -> tuple[tuple[float, float], ...]:
    """Parse "t:a,t:a" breakpoint pairs."""
    points = []
    for part in text.split(","):
        t, _, a = part.partition(":")
        points.append((float(t), float(a)))
    return tuple(points)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lookback", type=int, default=96)
    p.add_argument("--horizon", type=int, default=96)
    p.add_argument("--window-half-width", type=int, default=12)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs-stage1", type=int, default=30)
    p.add_argument("--epochs-stage2", type=int, default=30)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--config", type=Path, default=None,
                   help="canonical key=value config file; flags override it")


def _config_from_args(args, seed: int, backbone: str, norm: str) -> ExperimentConfig:
    if args.config is not None:
        base = parse_config_text(Path(args.config).read_text())
    else:
        base = ExperimentConfig()
    return ExperimentConfig(
        lookback=args.lookback,
        horizon=args.horizon,
        window_half_width=args.window_half_width,
        batch_size=args.batch_size,
        epochs_stage1=args.epochs_stage1,
        epochs_stage2=args.epochs_stage2,
        learning_rate=args.learning_rate,
        seed=seed,
        alpha_init=base.alpha_init,
        beta_init=base.beta_init,
        backbone=backbone,
        norm=norm,
        mean_hidden=base.mean_hidden,
        fm_hidden=base.fm_hidden,
        phase_channels=base.phase_channels,
        patience=base.patience,
    )


def _split_windows(dataset: Dataset, config: ExperimentConfig):
    """Stride-1 train/val windows, non-overlapping (stride-T) test windows."""
    train = make_windows(dataset.segment("train"), config.lookback, config.horizon)
    val = make_windows(dataset.segment("val"), config.lookback, config.horizon)
    test = make_windows(
        dataset.segment("test"), config.lookback, config.horizon,
        stride=config.horizon,
    )
    return train, val, test


def _run_training(data_path: str, config: ExperimentConfig):
    series = load_csv(data_path)
    dataset = split_standardize(
        series, min_segment=config.lookback + config.horizon
    )
    train, val, test = _split_windows(dataset, config)
    state = build_state(config, series.channels)
    t0 = time.perf_counter()
    train_model(state, train, val)
    train_seconds = time.perf_counter() - t0
    metrics = evaluate(state, test)
    manifest = {
        "run_id": config.run_id(),
        "config": config.canonical_text(),
        "channels": series.channels,
        "traces": state.traces,
        "test_metrics": metrics,
        "timings": {"train_seconds": train_seconds},
    }
    return state, manifest


def cmd_synth(args) -> int:
    spec = SynthSpec(
        length=args.length,
        channels=args.channels,
        slopes=args.slope,
        period=args.period,
        envelope=_parse_envelope(args.envelope),
        drift=args.drift,
        noise_std=args.noise,
        seed=args.seed,
    )
    series = generate_synthetic(spec)
    write_csv(args.out, series)
    _log(f"wrote {series.channels} channels x {series.length} steps to {args.out}")
    _emit({"out": str(args.out), "channels": series.channels, "length": series.length})
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args, args.seed, args.backbone, args.norm)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state, manifest = _run_training(args.data, config)
    ckpt = out_dir / "checkpoint.apn"
    save_checkpoint(state, ckpt)
    manifest["checkpoint"] = str(ckpt)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    _emit(manifest)
    return 0


def cmd_eval(args) -> int:
    state = load_checkpoint(args.checkpoint)
    config = state.config
    series = load_csv(args.data)
    if series.channels != state.channels:
        raise ValueError(
            f"checkpoint was trained on {state.channels} channels, data has "
            f"{series.channels}"
        )
    dataset = split_standardize(series, min_segment=config.lookback + config.horizon)
    _, _, test = _split_windows(dataset, config)
    metrics = evaluate(state, test)
    preds = predict_batch(state, np.stack([p.x.data for p in test]))
    if args.out:
        names = series.channel_names or [f"ch{i}" for i in range(series.channels)]
        with Path(args.out).open("w", newline="") as fh:
            fh.write("window,step," + ",".join(names) + "\n")
            for w in range(preds.shape[0]):
                for t in range(preds.shape[2]):
                    cells = ",".join(repr(v) for v in preds[w, :, t])
                    fh.write(f"{w},{t},{cells}\n")
        _log(f"wrote {preds.shape[0] * preds.shape[2]} prediction rows to {args.out}")
    _emit({"horizon": config.horizon, **metrics})
    return 0


def _run_cell(job) -> dict:
    data_path, config_text = job
    config = parse_config_text(config_text)
    _, manifest = _run_training(data_path, config)
    return {
        "backbone": config.backbone,
        "norm": config.norm,
        "seed": config.seed,
        **manifest["test_metrics"],
    }


def cmd_compare(args) -> int:
    backbones = args.backbones.split(",")
    norms = args.norms.split(",")
    seeds = [int(s) for s in args.seeds.split(",")]
    jobs = []
    for backbone in backbones:
        for norm in norms:
            for seed in seeds:
                config = _config_from_args(args, seed, backbone, norm)
                jobs.append((args.data, config.canonical_text()))
    workers = int(os.environ.get("APN_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_cell, jobs))
    else:
        runs = []
        for i, job in enumerate(jobs, 1):
            _log(f"[{i}/{len(jobs)}] training {job[0]} ...")
            runs.append(_run_cell(job))

    cells = []
    for backbone in backbones:
        for norm in norms:
            picked = [r for r in runs if r["backbone"] == backbone and r["norm"] == norm]
            mse = np.array([r["mse"] for r in picked])
            mae = np.array([r["mae"] for r in picked])
            cells.append(
                {
                    "backbone": backbone,
                    "norm": norm,
                    "seeds": seeds,
                    "mse_mean": float(mse.mean()),
                    "mse_std": float(mse.std()),
                    "mae_mean": float(mae.mean()),
                    "mae_std": float(mae.std()),
                    "best": False,
                }
            )
    for backbone in backbones:
        group = [c for c in cells if c["backbone"] == backbone]
        min(group, key=lambda c: c["mse_mean"])["best"] = True

    header = f"{'backbone':<10}{'norm':<10}{'mse (mean+/-std)':<24}{'mae (mean+/-std)':<24}best"
    _log(header)
    _log("-" * len(header))
    for c in cells:
        _log(
            f"{c['backbone']:<10}{c['norm']:<10}"
            f"{c['mse_mean']:.6f} +/- {c['mse_std']:.6f}    "
            f"{c['mae_mean']:.6f} +/- {c['mae_std']:.6f}    "
            f"{'*' if c['best'] else ''}"
        )
    _emit({"cells": cells, "runs": runs})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timeapn",
        description="Adaptive amplitude-phase normalization for forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic non-stationary series")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--period", type=float, default=24.0)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--slope", type=float, default=0.0)
    p.add_argument("--envelope", type=str, default="0:1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("train", help="train a pipeline and write a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--backbone", choices=["linear", "mlp"], default="linear")
    p.add_argument("--norm", choices=["timeapn", "revin", "none"], default="timeapn")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="per-window predictions CSV")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("compare", help="train every (backbone, norm, seed) cell")
    p.add_argument("--data", required=True)
    p.add_argument("--backbones", default="linear")
    p.add_argument("--norms", default="timeapn,revin,none")
    p.add_argument("--seeds", default="0")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except BrokenPipeError:
        raise
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
