"""Command-line surface: preprocess, train, evaluate, export-filters.

Exit statuses: 0 success, 1 runtime/numeric failure, 2 usage/IO error.
Input paths are tried as given first, then under $COSREC_DATA_DIR.
Training logs are one flat JSON object per line; metric reports are
`key value` lines with four decimal places.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data import (Dataset, ParseError, load_dataset, parse_gowalla,
                   parse_movielens, preprocess, save_dataset)
from .estimators import PopularityRecommender
from .metrics import evaluate
from .model import CosRecModel, ModelConfig
from .optim import Adam
from .training import train_model

DATA_DIR_ENV = "COSREC_DATA_DIR"

# Presets keep the conv chain consistent when the first kernel changes:
# a 5x5 input leaves room for exactly these follow-up kernels.
FIRST_KERNEL_PRESETS = {1: (1, 3, 1, 3), 3: (3, 3, 1, 1), 5: (5, 1, 1, 1)}

DATASET_PARSERS = {"ml1m": parse_movielens, "gowalla": parse_gowalla}
DATASET_THRESHOLDS = {"ml1m": (5, 5), "gowalla": (15, 15)}


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def resolve_input_path(path: str) -> str:
    """The path as given, or the same path under $COSREC_DATA_DIR."""
    if os.path.exists(path):
        return path
    data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir and not os.path.isabs(path):
        candidate = os.path.join(data_dir, path)
        if os.path.exists(candidate):
            return candidate
        raise CliError(f"no such file: {path} (also tried {candidate})")
    raise CliError(f"no such file: {path}")


def _model_config_dict(config: ModelConfig) -> dict:
    return {
        "num_items": config.num_items,
        "num_users": config.num_users,
        "embedding_dim": config.embedding_dim,
        "window_size": config.window_size,
        "horizon": config.horizon,
        "conv_channels": list(config.conv_channels),
        "kernel_sizes": list(config.kernel_sizes),
        "dropout": config.dropout,
        "variant": config.variant,
        "mlp_hidden": config.mlp_hidden,
        "dtype": config.dtype,
    }


def _model_config_from_dict(d: dict) -> ModelConfig:
    return ModelConfig(
        num_items=int(d["num_items"]),
        num_users=int(d["num_users"]),
        embedding_dim=int(d["embedding_dim"]),
        window_size=int(d["window_size"]),
        horizon=int(d["horizon"]),
        conv_channels=tuple(d["conv_channels"]),
        kernel_sizes=tuple(d["kernel_sizes"]),
        dropout=float(d["dropout"]),
        variant=str(d["variant"]),
        mlp_hidden=int(d["mlp_hidden"]),
        dtype=str(d["dtype"]),
    )


# ----------------------------------------------------------------------
# subcommands

def cmd_preprocess(args) -> int:
    parse = DATASET_PARSERS[args.dataset]
    min_user, min_item = DATASET_THRESHOLDS[args.dataset]
    if args.min_user is not None:
        min_user = args.min_user
    if args.min_item is not None:
        min_item = args.min_item

    path = resolve_input_path(args.input)
    with open(path, encoding="latin-1") as f:
        raw = parse(f)
    dataset = preprocess(raw, min_user, min_item, seed=args.seed)
    save_dataset(dataset, args.output)

    stats = dataset.stats()
    print(f"users {stats['users']}")
    print(f"items {stats['items']}")
    print(f"actions {stats['actions']}")
    print(f"avg_actions_per_user {stats['avg_actions_per_user']:.4f}")
    print(f"avg_actions_per_item {stats['avg_actions_per_item']:.4f}")
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(resolve_input_path(args.data))
    config = ModelConfig(
        num_items=dataset.num_items,
        num_users=dataset.num_users,
        embedding_dim=args.embedding_dim,
        window_size=args.window_size,
        horizon=args.horizon,
        conv_channels=tuple(args.channels),
        kernel_sizes=FIRST_KERNEL_PRESETS[args.first_kernel],
        dropout=args.dropout,
        variant=args.variant,
        mlp_hidden=args.mlp_hidden,
    )
    model = CosRecModel(config)
    model.init_parameters(args.seed)
    optimizer = Adam(learning_rate=args.learning_rate)

    log_file = open(args.log_file, "w") if args.log_file else None
    try:
        def log_fn(record: dict) -> None:
            line = json.dumps(record, sort_keys=True)
            print(line)
            if log_file:
                log_file.write(line + "\n")
                log_file.flush()

        train_model(
            model, dataset,
            epochs=args.epochs,
            batch_size=args.batch_size,
            num_negatives=args.num_negatives,
            seed=args.seed,
            validation=not args.no_validation,
            patience=args.patience,
            eval_threads=args.threads,
            log_fn=log_fn,
            optimizer=optimizer,
        )
    finally:
        if log_file:
            log_file.close()

    run_config = {
        "model": _model_config_dict(config),
        "train": {
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.learning_rate,
            "num_negatives": args.num_negatives,
            "validation": not args.no_validation,
            "patience": args.patience,
            "seed": args.seed,
        },
    }
    save_checkpoint(args.out, run_config, model.state_dict(),
                    optimizer=optimizer, rng_state={"seed": args.seed})
    return 0


def cmd_evaluate(args) -> int:
    dataset = load_dataset(resolve_input_path(args.data))
    if args.model == "poprec":
        scorer = PopularityRecommender().fit(dataset)
    else:
        ck = load_checkpoint(resolve_input_path(args.checkpoint))
        spec = ck.config["model"]
        if (spec["num_items"] != dataset.num_items
                or spec["num_users"] != dataset.num_users):
            raise CliError(
                f"checkpoint vocabulary ({spec['num_users']} users, "
                f"{spec['num_items']} items) does not match dataset "
                f"({dataset.num_users} users, {dataset.num_items} items)")
        model = CosRecModel(_model_config_from_dict(spec))
        model.load_state_dict(ck.state)
        scorer = model
    report = evaluate(scorer, dataset, ks=(1, 5, 10), threads=args.threads)
    sys.stdout.write(report.to_text())
    return 0


def cmd_export_filters(args) -> int:
    ck = load_checkpoint(resolve_input_path(args.checkpoint))
    grids = {name[:-len(".weight")]: tensor
             for name, tensor in ck.state.items()
             if name.endswith(".weight") and tensor.ndim == 4}
    if args.layer not in grids:
        raise CliError(f"unknown layer {args.layer!r}; "
                       f"valid layers: {', '.join(sorted(grids)) or '(none)'}")
    weight = grids[args.layer]
    out_channels, in_channels, k, _ = weight.shape

    os.makedirs(args.out, exist_ok=True)
    index_rows = ["out_channel,in_channel,file"]
    for o in range(out_channels):
        for i in range(in_channels):
            name = f"{args.layer}_out{o:03d}_in{i:03d}.csv"
            rows = [",".join(repr(float(v)) for v in weight[o, i, r])
                    for r in range(k)]
            with open(os.path.join(args.out, name), "w") as f:
                f.write("\n".join(rows) + "\n")
            index_rows.append(f"{o},{i},{name}")
    with open(os.path.join(args.out, "index.csv"), "w") as f:
        f.write("\n".join(index_rows) + "\n")
    print(f"wrote {out_channels * in_channels} filter grids to {args.out}")
    return 0


# ----------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosrec",
        description="Train and evaluate the CosRec sequential recommender.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="parse a raw log into a dataset file")
    p.add_argument("--dataset", choices=sorted(DATASET_PARSERS), required=True)
    p.add_argument("--input", required=True, help="raw interaction log")
    p.add_argument("--output", required=True, help="dataset file to write")
    p.add_argument("--min-user", type=int, default=None,
                   help="minimum actions per user (default: 5 ml1m, 15 gowalla)")
    p.add_argument("--min-item", type=int, default=None,
                   help="minimum actions per item (default: 5 ml1m, 15 gowalla)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--variant", choices=["cnn", "mlp-base"], default="cnn")
    p.add_argument("--embedding-dim", "-d", type=int, default=50)
    p.add_argument("--window-size", type=int, default=5)
    p.add_argument("--horizon", type=int, default=3)
    p.add_argument("--num-negatives", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--channels", type=int, nargs=2, default=[128, 256],
                   metavar=("D1", "D2"), help="widths of the two conv blocks")
    p.add_argument("--first-kernel", type=int, choices=sorted(FIRST_KERNEL_PRESETS),
                   default=1, help="kernel size of the first conv layer")
    p.add_argument("--mlp-hidden", type=int, default=512)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--no-validation", action="store_true",
                   help="train on the full training split without early stopping")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="threads for the per-epoch validation pass")
    p.add_argument("--log-file", default=None, help="also write JSON logs here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="compute ranking metrics on the test split")
    p.add_argument("--data", required=True, help="dataset file")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--checkpoint", help="checkpoint file to score with")
    which.add_argument("--model", choices=["poprec"],
                       help="built-in baseline to score with")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-filters", help="dump conv filters as CSV grids")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--layer", required=True,
                   help="conv layer name, e.g. conv1_2")
    p.add_argument("--out", required=True, help="directory for the CSV files")
    p.set_defaults(func=cmd_export_filters)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (ParseError, FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (FloatingPointError, ZeroDivisionError, OverflowError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
