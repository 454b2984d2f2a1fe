#!/usr/bin/env python3
"""
Learned Intra Prediction - Main Entry Point

Subcommands:
    train       fit the network (or the affine predictors) on image patches
    collapse    turn a trained network into the two linear predictor families
    eval        mode-decision statistics of learned vs. conventional modes
    viz         per-sample predictor heatmaps
    complexity  multiplications per block for the network and the linear predictor

Defaults come from config.yaml; flags override them.
"""

import argparse
import logging
import os
import sys
from dataclasses import asdict
from typing import List, Optional

import numpy as np
import yaml

from harness.complexity import (complexity_table, format_complexity_table,
                                instrumented_count, multiplication_count)
from harness.conventional import ConventionalModeSet
from harness.evaluate import evaluate_images
from persistence.export import (OutputBatch, write_heatmap_csv, write_heatmap_pgm, write_loss_csv,
                                write_report_csv, write_report_json)
from persistence.model_file import load_model, load_provenance, save_model
from prediction.collapse import (collapse_no_intercept, collapse_with_intercept,
                                 normalize_rows, row_sum_audit)
from prediction.errors import ModeIndexError, TrainingDivergedError
from prediction.heatmap import heatmap_canvas, matrix_scale, predictor_heatmap
from prediction.types import BlockSpec, NNModel, SUPPORTED_SIZES
from training.images import load_image_dir
from training.patches import sample_dataset
from training.trainer import TrainConfig, train_linear, train_nn

logger = logging.getLogger("main")

DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'config.yaml')

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def load_config(path: str) -> dict:
    try:
        with open(path, 'r') as f:
            config = yaml.safe_load(f) or {}
    except FileNotFoundError:
        print(f"Error: Configuration file '{path}' not found.")
        sys.exit(EXIT_RUNTIME)
    except yaml.YAMLError as e:
        print(f"Error parsing configuration file: {e}")
        sys.exit(EXIT_RUNTIME)
    return config


def setup_logging(config: dict, verbose: bool = False):
    level_name = 'DEBUG' if verbose else str(config.get('logging', {}).get('level', 'INFO')).upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        raise ValueError(f"Invalid logging level: '{level_name}'")
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("[%(name)s] %(levelname)s - %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)


def _pick(flag, section: dict, key: str, default):
    """CLI flag if given, else the config value, else the default."""
    return flag if flag is not None else section.get(key, default)


def _block_spec(args, config: dict) -> BlockSpec:
    return BlockSpec(int(_pick(args.N, config.get('block', {}), 'N', 4)))


def _load_images(paths: List[str]):
    images = []
    for path in paths:
        images.extend(load_image_dir(path))
    return images


# ── train ────────────────────────────────────────────────────────

def cmd_train(args, config: dict) -> int:
    train_cfg = config.get('training', {})
    data_cfg = config.get('dataset', {})
    spec = _block_spec(args, config)

    kind = _pick(args.kind, train_cfg, 'kind', 'nn')
    if kind not in ('nn', 'linear'):
        raise ValueError(f"Invalid training kind: '{kind}' (must be 'nn' or 'linear')")
    patches = int(_pick(args.patches, data_cfg, 'patches', 20000))
    if patches < 1:
        raise ValueError(f"Invalid patch count: {patches} (must be >= 1)")

    init_model = load_model(args.init_from) if args.init_from else None
    if kind == 'nn' and init_model is not None and not isinstance(init_model, NNModel):
        raise ValueError(f"--init-from for a network must be a network file, got {init_model.kind}")

    config_obj = TrainConfig(
        seed=int(_pick(args.seed, train_cfg, 'seed', 0)),
        learning_rate=float(_pick(args.lr, train_cfg, 'learning_rate', 1e-3)),
        batch_size=int(_pick(args.batch, train_cfg, 'batch_size', 256)),
        steps=int(_pick(args.steps, train_cfg, 'steps', 2000)),
        optimizer=_pick(args.optimizer, train_cfg, 'optimizer', 'adam'),
        K=int(_pick(args.K, train_cfg, 'K', 8)),
        init='from_nn' if isinstance(init_model, NNModel) and kind == 'linear'
             else train_cfg.get('init', 'fan_in_uniform'),
        log_every=int(train_cfg.get('log_every', 100)),
        adam_beta1=float(train_cfg.get('adam_beta1', 0.9)),
        adam_beta2=float(train_cfg.get('adam_beta2', 0.999)),
        adam_eps=float(train_cfg.get('adam_eps', 1e-8)),
    )
    if config_obj.init == 'from_nn' and init_model is None:
        raise ValueError("init 'from_nn' needs --init-from MODEL")

    images = _load_images(args.images or [data_cfg.get('images', 'data/')])
    sampler_seed = int(data_cfg.get('seed', 0)) or config_obj.seed
    dataset = sample_dataset(images, patches, spec, sampler_seed)

    print(f"[TRAIN] {kind} N={spec.N} K={config_obj.K}: {len(dataset)} patches from "
          f"{len(images)} images, {config_obj.steps} steps")
    trainer = train_nn if kind == 'nn' else train_linear
    result = trainer(dataset, spec, config_obj, init_model=init_model)

    out = args.out or train_cfg.get('out', f"out/model_{kind}.json")
    provenance_cfg = dict(asdict(config_obj), N=spec.N, patches=patches, sampler_seed=sampler_seed)
    loss_csv = args.loss_csv or train_cfg.get('loss_csv')
    with OutputBatch() as batch:
        save_model(result.model, out, seed=config_obj.seed, config=provenance_cfg,
                   timestamp=_timestamp(args, config), batch=batch)
        if loss_csv:
            write_loss_csv(loss_csv, result.loss_trace, batch=batch)

    means = result.epoch_means()
    print(f"[TRAIN] epoch mean loss {means[0]:.6g} -> {means[-1]:.6g} over {len(means)} epochs")
    print(f"[TRAIN] model written to {out}")
    return EXIT_OK


def _timestamp(args, config: dict) -> bool:
    if getattr(args, 'no_timestamp', False):
        return False
    return bool(config.get('persistence', {}).get('timestamp', True))


# ── collapse ─────────────────────────────────────────────────────

def cmd_collapse(args, config: dict) -> int:
    col_cfg = config.get('collapse', {})
    model = load_model(args.model, expected_kind='nn')
    seed = load_provenance(args.model).seed

    linear_a = collapse_no_intercept(model)
    linear_gb = collapse_with_intercept(model)

    out_a = args.out_a or col_cfg.get('out_a', 'out/model_A.json')
    out_gb = args.out_gb or col_cfg.get('out_gb', 'out/model_GB.json')
    timestamp = _timestamp(args, config)
    with OutputBatch() as batch:
        save_model(linear_a, out_a, seed=seed, timestamp=timestamp, batch=batch)
        save_model(linear_gb, out_gb, seed=seed, timestamp=timestamp, batch=batch)

    print(f"[COLLAPSE] N={model.spec.N} K={model.K}, max row-sum deviation "
          f"{row_sum_audit(linear_a):.3g}")
    for k in range(model.K):
        rows = linear_a.degenerate_rows.get(k, [])
        print(f"[COLLAPSE] mode {k}: {len(rows)} degenerate rows")
    print(f"[COLLAPSE] wrote {out_a} and {out_gb}")
    return EXIT_OK


# ── eval ─────────────────────────────────────────────────────────

def cmd_eval(args, config: dict) -> int:
    eval_cfg = config.get('evaluation', {})
    spec = _block_spec(args, config)
    images = _load_images(args.images or [config.get('dataset', {}).get('images', 'data/')])
    models = [load_model(path) for path in (args.models or [])]
    mode_set = ConventionalModeSet(int(_pick(args.modes, eval_cfg, 'modes', 35)))
    metric = _pick(args.metric, eval_cfg, 'metric', 'sse')
    keep = bool(args.decisions or eval_cfg.get('decisions', False))

    report = evaluate_images(images, spec, models, mode_set, metric, keep_decisions=keep)

    out_json = args.out_json or eval_cfg.get('out_json', 'out/report.json')
    out_csv = args.out_csv or eval_cfg.get('out_csv', 'out/report.csv')
    with OutputBatch() as batch:
        write_report_json(out_json, report, include_decisions=keep, batch=batch)
        write_report_csv(out_csv, report, batch=batch)

    print(f"[EVAL] N={spec.N}: {report.blocks} blocks in {len(images)} images, "
          f"conventional mean SSE {report.conventional_mean_sse:.2f}")
    for kind, fam in sorted(report.usage.items()):
        print(f"[EVAL] {kind}: learned {fam.usage_pct:.1f}% / conventional {fam.conventional_pct:.1f}%, "
              f"dominant modes {fam.dominant_modes}")
    print(f"[EVAL] wrote {out_json} and {out_csv}")
    return EXIT_OK


# ── viz ──────────────────────────────────────────────────────────

def _viz_matrix(model, source: str, k: int) -> np.ndarray:
    """n x m predictor matrix of mode k in the requested form."""
    if model.kind == 'nn':
        model = collapse_with_intercept(model) if source == 'gamma' else collapse_no_intercept(model)
    if model.kind == 'linear_no_intercept':
        if source == 'gamma':
            logger.warning("Model has no Gamma, showing row-normalized A")
        return model.A[k]
    if source == 'a':
        return normalize_rows(model.Gamma[k])[0]
    return model.Gamma[k]


def parse_targets(text: str, N: int) -> List[tuple]:
    """'all' or space/semicolon separated 'row,col' pairs."""
    if text.strip() == 'all':
        return [(r, c) for r in range(N) for c in range(N)]
    targets = []
    for item in text.replace(';', ' ').split():
        try:
            r, c = (int(v) for v in item.split(','))
        except ValueError:
            raise ValueError(f"Invalid target '{item}' (must be 'row,col')")
        if not (0 <= r < N and 0 <= c < N):
            raise ValueError(f"Invalid target ({r},{c}) (must lie inside the {N}x{N} block)")
        targets.append((r, c))
    if not targets:
        raise ValueError("No heatmap targets given")
    return targets


def cmd_viz(args, config: dict) -> int:
    viz_cfg = config.get('viz', {})
    model = load_model(args.model)
    spec = model.spec
    if not 0 <= args.mode < model.K:
        raise ModeIndexError(f"Mode {args.mode} out of range (model has K={model.K} modes)")
    source = _pick(args.source, viz_cfg, 'source', 'gamma')
    if source not in ('gamma', 'a'):
        raise ValueError(f"Invalid heatmap source: '{source}' (must be 'gamma' or 'a')")
    targets = parse_targets(' '.join(args.targets) if args.targets else str(viz_cfg.get('targets', 'all')),
                            spec.N)
    out_dir = args.out or viz_cfg.get('out', 'out/heatmaps')

    M = _viz_matrix(model, source, args.mode)
    scale = matrix_scale(M)
    with OutputBatch() as batch:
        for r, c in targets:
            grid = predictor_heatmap(M[r * spec.N + c], spec, (r, c))
            stem = os.path.join(out_dir, f"heatmap_N{spec.N}_k{args.mode}_r{r}_c{c}")
            write_heatmap_pgm(stem + '.pgm', heatmap_canvas(grid, scale), batch=batch)
            write_heatmap_csv(stem + '.csv', grid, batch=batch)
    print(f"[VIZ] {len(targets)} heatmaps of mode {args.mode} ({source}) written to {out_dir}")
    return EXIT_OK


# ── complexity ───────────────────────────────────────────────────

def cmd_complexity(args, config: dict) -> int:
    sizes = args.N or list(SUPPORTED_SIZES)
    rows = complexity_table(sizes)
    print(format_complexity_table(rows))
    if not args.verify:
        return EXIT_OK

    mismatches = 0
    for N in sizes:
        spec = BlockSpec(N)
        for kind in ('nn', 'simplified'):
            expected = multiplication_count(spec, kind)
            counted = instrumented_count(spec, kind)
            status = "OK" if counted == expected else "MISMATCH"
            print(f"[VERIFY] N={N} {kind}: formula {expected}, counted {counted} {status}")
            mismatches += counted != expected
    return EXIT_OK if mismatches == 0 else EXIT_RUNTIME


# ── entry point ──────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Learned Intra Prediction")
    parser.add_argument('--config', '-c', default=DEFAULT_CONFIG,
                        help='Configuration file path (default: config.yaml next to main.py)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('train', help='Train learned modes on image patches')
    p.add_argument('--kind', choices=['nn', 'linear'], default=None)
    p.add_argument('--images', nargs='+', default=None, help='Image directories or files')
    p.add_argument('--N', type=int, default=None, help='Block size (4, 8 or 16)')
    p.add_argument('--K', type=int, default=None, help='Number of learned modes')
    p.add_argument('--patches', type=int, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--steps', type=int, default=None)
    p.add_argument('--lr', type=float, default=None)
    p.add_argument('--batch', type=int, default=None)
    p.add_argument('--optimizer', choices=['adam', 'sgd'], default=None)
    p.add_argument('--out', default=None, help='Model file to write')
    p.add_argument('--loss-csv', default=None)
    p.add_argument('--init-from', default=None, help='Start from this model file')
    p.add_argument('--no-timestamp', action='store_true', help='Omit the creation time')
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('collapse', help='Collapse a trained network into linear predictors')
    p.add_argument('model')
    p.add_argument('--out-a', default=None, help='Row-normalized (no intercept) model file')
    p.add_argument('--out-gb', default=None, help='Gamma + beta model file')
    p.add_argument('--no-timestamp', action='store_true')
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser('eval', help='Evaluate mode decision on images')
    p.add_argument('--images', nargs='+', default=None)
    p.add_argument('--N', type=int, default=None)
    p.add_argument('--models', nargs='*', default=None)
    p.add_argument('--out-json', default=None)
    p.add_argument('--out-csv', default=None)
    p.add_argument('--decisions', action='store_true', help='Keep per-block decisions')
    p.add_argument('--metric', choices=['sse', 'satd'], default=None)
    p.add_argument('--modes', type=int, default=None, help='Conventional modes in the pool (2..35)')
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('viz', help='Write predictor heatmaps')
    p.add_argument('model')
    p.add_argument('--mode', type=int, required=True)
    p.add_argument('--targets', nargs='+', default=None, help="'all' or row,col pairs")
    p.add_argument('--out', default=None, help='Output directory')
    p.add_argument('--source', choices=['gamma', 'a'], default=None)
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser('complexity', help='Multiplications per block')
    p.add_argument('--N', type=int, nargs='+', default=None, choices=list(SUPPORTED_SIZES))
    p.add_argument('--verify', action='store_true', help='Check against instrumented counts')
    p.set_defaults(func=cmd_complexity)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config)
    try:
        setup_logging(config, args.verbose)
        return args.func(args, config)
    except (ValueError, IndexError) as e:
        # bad arguments, invalid or mismatched model files, out-of-range modes
        print(f"Error: {e}")
        return EXIT_USAGE
    except (TrainingDivergedError, OSError) as e:
        print(f"Error: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
