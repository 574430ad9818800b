"""Command-line entry point tying the pipeline together.

Subcommands:
    preprocess  CSV -> cleaned, categorically encoded dataset (+ schema)
    extract     landmark coordinate file -> facial-distance CSV
    merge       behavioral dataset + distance CSV -> combined dataset
    train       centralized train/eval, optionally k-fold cross-validated
    fedsweep    federated runs over a list of client counts, metrics CSV

Exit codes: 0 success, 2 input error, 3 numeric divergence. Outputs are a
pure function of inputs + seed, so reruns overwrite files byte-identically.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import data as data_mod
from . import landmarks as lm
from .errors import DivergenceError, InputError
from .federation import FederationConfig, run_federation, write_round_metrics_csv
from .models import TrainConfig, train_model

log = logging.getLogger("fedscreen")


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _parse_int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        values = [int(v) for v in text]
    else:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    if not values:
        raise InputError("empty sweep list")
    if len(set(values)) != len(values) or any(v < 1 for v in values):
        raise InputError(f"sweep values must be positive and distinct: {values}")
    return values


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill in arguments from a JSON config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.is_file():
        raise InputError(f"no such config file: {path}")
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InputError(f"{path}: unknown config key {key!r}")
        if getattr(args, attr) == parser.get_default(attr):
            setattr(args, attr, value)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_preprocess(args) -> int:
    table = data_mod.load_csv(args.input, label_column=args.label)
    n_before = table.n_rows
    if args.drop:
        table = data_mod.drop_columns(table, [c.strip() for c in args.drop.split(",")])
    table = data_mod.drop_missing(table)
    dataset = data_mod.encode_categorical(table)
    out = Path(args.out)
    data_mod.save_dataset(dataset, out)
    print(f"rows: {n_before} -> {dataset.n_rows}")
    print(f"features: {dataset.n_features}")
    return 0


def cmd_extract(args) -> int:
    records, skipped = lm.parse_landmarks(args.input)
    for report in skipped:
        log.info("skipped landmark record: %s", report)
    features = lm.extract_all(records)
    lm.write_distances_csv(features, args.out)
    print(
        f"records: {len(records) + len(skipped)}, kept: {len(features)}, "
        f"skipped: {len(skipped)}"
    )
    return 0


def cmd_merge(args) -> int:
    behavioral = data_mod.load_dataset(args.behavioral)
    distances = lm.read_distances_csv(args.distances)
    merged = data_mod.merge_datasets(behavioral, distances, seed=args.seed)
    data_mod.save_dataset(merged, Path(args.out))
    print(f"merged rows: {merged.n_rows}")
    print(f"features: {merged.n_features}")
    return 0


def _train_cfg_from_args(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        model_kind=args.model,
        hidden_width=args.hidden_width,
        max_depth=args.max_depth,
        k_neighbors=args.k,
        standardize=not args.no_standardize,
    )


def cmd_train(args) -> int:
    dataset = data_mod.load_dataset(args.data)
    cfg = _train_cfg_from_args(args)
    lines = ["split,accuracy,loss,n_test"]
    if args.kfold:
        plan = data_mod.kfold_plan(dataset, args.kfold, shuffle=True, seed=args.seed)
        accuracies = []
        for fold in range(plan.k):
            train = dataset.subset(plan.rest_indices(fold))
            test = dataset.subset(plan.fold_indices(fold))
            report = train_model(train, cfg).evaluate(test)
            accuracies.append(report.accuracy)
            lines.append(
                f"fold{fold},{report.accuracy!r},{report.loss!r},{report.n_test}"
            )
            print(f"fold {fold}: accuracy {report.accuracy:.4f}")
        mean_acc = sum(accuracies) / len(accuracies)
        lines.append(f"mean,{mean_acc!r},,{dataset.n_rows}")
        print(f"mean accuracy over {plan.k} folds: {mean_acc:.4f}")
    else:
        split = data_mod.train_test_split(dataset, args.train_fraction, args.seed)
        report = train_model(split.train, cfg).evaluate(split.test)
        lines.append(f"holdout,{report.accuracy!r},{report.loss!r},{report.n_test}")
        print(f"accuracy: {report.accuracy:.4f} (n_test={report.n_test})")
    if args.out:
        _atomic_write_text(Path(args.out), "\n".join(lines) + "\n")
    return 0


def cmd_fedsweep(args) -> int:
    dataset = data_mod.load_dataset(args.data)
    client_counts = _parse_int_list(args.clients)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_cfg = TrainConfig(
        learning_rate=args.lr,
        seed=args.seed,
        model_kind=args.model,
        hidden_width=args.hidden_width,
        standardize=False,
    )
    summary = []
    for n_clients in sorted(client_counts):
        cfg = FederationConfig(
            n_clients=n_clients,
            rounds=args.rounds,
            epochs_per_round=args.epochs,
            aggregation=args.aggregation,
            train_cfg=train_cfg,
            seed=args.seed,
            train_fraction=args.train_fraction,
        )
        result = run_federation(dataset, cfg)
        rounds_path = out_dir / f"rounds_C{n_clients}.csv"
        write_round_metrics_csv(result.rounds, rounds_path)
        summary.append(
            (
                n_clients,
                max(result.shard_sizes),
                max(result.train_sizes),
                result.final_accuracy,
            )
        )
    lines = ["clients,data_per_client,data_per_client_train,global_accuracy"]
    for n_clients, per_client, per_client_train, acc in summary:
        lines.append(f"{n_clients},{per_client},{per_client_train},{acc!r}")
        print(
            f"C={n_clients} data_per_client={per_client} "
            f"train_per_client={per_client_train} global_accuracy={acc:.4f}"
        )
    _atomic_write_text(out_dir / "sweep.csv", "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedscreen",
        description="Federated ASD-screening simulation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="clean and encode a raw CSV")
    p.add_argument("input")
    p.add_argument("--label", required=True, help="name of the class column")
    p.add_argument("--drop", default=None, help="comma-separated columns to discard")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="landmark file -> facial distance CSV")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("merge", help="combine behavioral and distance data")
    p.add_argument("--behavioral", required=True)
    p.add_argument("--distances", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("train", help="centralized train/eval or k-fold CV")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--model", default="logistic",
                   choices=["logistic", "mlp", "tree", "knn"])
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kfold", type=int, default=None)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--hidden-width", type=int, default=16)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--k", type=int, default=3, help="neighbors for knn")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("fedsweep", help="federated runs over client counts")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--clients", default="3,10,50",
                   help="comma-separated client counts")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--model", default="logistic", choices=["logistic", "mlp"])
    p.add_argument("--aggregation", default="uniform",
                   choices=["uniform", "size_weighted"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--hidden-width", type=int, default=16)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fedsweep)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("FEDSCREEN_LOG", "WARNING").upper(),
                      logging.WARNING)
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        return args.func(args)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
