"""Command-line front end: generate | train | eval | features | pca.

Every run is driven by an optional JSON config file plus flags; each
flag mirrors a config key and wins over it. Unknown config keys are
rejected by name. Exit codes: 0 success, 1 usage or config error,
2 I/O or file-format error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .checkpoint import CheckpointFormatError, load_checkpoint
from .dataio import DatasetFormatError, read_dataset, write_dataset
from .evaluation import (
    evaluate,
    export_features,
    intra_class_dispersion,
    pca_2d,
    write_confusion_csv,
    write_features_csv,
    write_metrics_csv,
    write_pca_csv,
)
from .network import network_from_state
from .signals import CLASS_NAMES, GenConfig, generate_dataset
from .training import (
    TrainConfig,
    TrainingDivergedError,
    train_two_stage,
    write_report,
)

__all__ = ["main", "ConfigError"]


class ConfigError(ValueError):
    """Bad config file or option values."""


class UsageError(Exception):
    """Bad command line; argparse errors are rerouted here."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_GEN_KEYS = {
    "frames_per_class_per_snr",
    "snr_list",
    "frame_len",
    "samples_per_symbol",
    "classes",
}
_TRAIN_KEYS = {
    "lr",
    "momentum",
    "weight_decay",
    "epochs_stage1",
    "epochs_stage2",
    "batch_size",
    "center_lr",
    "lambda",
    "alpha",
    "reduction",
    "train_frac",
    "lr_decay_epochs",
    "lr_decay_factor",
    "early_stop_patience",
    "record_timing",
}
_PATH_KEYS = {"dataset", "checkpoint", "out_dir"}
_ALL_KEYS = _GEN_KEYS | _TRAIN_KEYS | _PATH_KEYS | {"seed"}


def _load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
    unknown = sorted(set(raw) - _ALL_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return raw


def _parse_snr_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad --snr-list value {text!r}") from exc


def _merged_config(args):
    cfg = _load_config(args.config) if args.config else {}
    overrides = {
        "seed": args.seed,
        "lambda": getattr(args, "lam", None),
        "alpha": args.alpha,
        "lr": args.lr,
        "epochs_stage1": args.epochs_stage1,
        "epochs_stage2": args.epochs_stage2,
        "batch_size": args.batch_size,
        "dataset": args.dataset,
        "checkpoint": args.checkpoint,
        "out_dir": args.out_dir,
    }
    if args.snr_list is not None:
        overrides["snr_list"] = _parse_snr_list(args.snr_list)
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    return cfg


def _require(cfg, key, purpose):
    if not cfg.get(key):
        raise ConfigError(f"missing {key!r}: {purpose}")
    return cfg[key]


def _class_ids(values):
    ids = []
    for v in values:
        if isinstance(v, str):
            if v not in CLASS_NAMES:
                raise ConfigError(
                    f"unknown class {v!r}; known: {', '.join(CLASS_NAMES)}"
                )
            ids.append(CLASS_NAMES.index(v))
        else:
            ids.append(int(v))
    return tuple(ids)


def _gen_config(cfg):
    kwargs = {k: cfg[k] for k in _GEN_KEYS if k in cfg}
    if "classes" in kwargs and kwargs["classes"] is not None:
        kwargs["classes"] = _class_ids(kwargs["classes"])
    if "snr_list" in kwargs:
        kwargs["snr_list"] = tuple(kwargs["snr_list"])
    try:
        return GenConfig(seed=int(cfg.get("seed", 0)), **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _train_config(cfg):
    kwargs = {k: cfg[k] for k in _TRAIN_KEYS if k in cfg}
    if "lambda" in kwargs:
        kwargs["lam"] = kwargs.pop("lambda")
    try:
        return TrainConfig(seed=int(cfg.get("seed", 0)), **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _out_dir(cfg):
    out = cfg.get("out_dir") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load_net(cfg):
    path = _require(cfg, "checkpoint", "path of the trained checkpoint")
    state = load_checkpoint(path)
    try:
        return network_from_state(state)
    except ValueError as exc:
        raise CheckpointFormatError(str(exc)) from exc


def cmd_generate(cfg):
    out_path = _require(cfg, "dataset", "output path for the generated file")
    gen_cfg = _gen_config(cfg)
    dataset = generate_dataset(gen_cfg)
    write_dataset(dataset, out_path)
    counts = {}
    for frame in dataset.frames:
        counts[(frame.class_id, frame.snr_db)] = (
            counts.get((frame.class_id, frame.snr_db), 0) + 1
        )
    for (cid, snr), n in sorted(counts.items()):
        print(f"{dataset.class_names[cid]} snr {snr} dB: {n}")
    print(f"total frames: {len(dataset)}")
    return 0


def cmd_train(cfg):
    data_path = _require(cfg, "dataset", "path of the training dataset")
    train_cfg = _train_config(cfg)
    out = _out_dir(cfg)
    dataset = read_dataset(data_path)
    net, centers, records = train_two_stage(dataset, train_cfg, out_dir=out)
    write_report(records, os.path.join(out, "train_report.csv"))
    if records:
        print(f"final test_acc={records[-1].test_acc:.6f}")
    print(f"report: {os.path.join(out, 'train_report.csv')}")
    return 0


def cmd_eval(cfg):
    data_path = _require(cfg, "dataset", "path of the dataset to score")
    net = _load_net(cfg)
    dataset = read_dataset(data_path)
    metrics = evaluate(net, dataset)
    out = _out_dir(cfg)
    write_metrics_csv(metrics, os.path.join(out, "metrics.csv"))
    write_confusion_csv(
        metrics, dataset.class_names, os.path.join(out, "confusion.csv")
    )
    print(f"overall_accuracy={metrics.overall_accuracy}")
    return 0


def cmd_features(cfg):
    data_path = _require(cfg, "dataset", "path of the dataset to embed")
    net = _load_net(cfg)
    dataset = read_dataset(data_path)
    dump = export_features(net, dataset)
    out = _out_dir(cfg)
    write_features_csv(dump, os.path.join(out, "features.csv"))
    per_class, mean = intra_class_dispersion(dump)
    for cid in sorted(per_class):
        print(f"dispersion {dataset.class_names[cid]}: {per_class[cid]:.6f}")
    print(f"mean_dispersion={mean:.6f}")
    return 0


def cmd_pca(cfg):
    data_path = _require(cfg, "dataset", "path of the dataset to project")
    net = _load_net(cfg)
    dataset = read_dataset(data_path)
    dump = export_features(net, dataset)
    coords = pca_2d(dump.features)
    out = _out_dir(cfg)
    write_pca_csv(dump, coords, os.path.join(out, "pca.csv"))
    print(f"pca rows: {len(coords)}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "features": cmd_features,
    "pca": cmd_pca,
}


def build_parser():
    parser = _Parser(
        prog="amcnet",
        description="Modulation classification: data generation, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--lambda", dest="lam", type=float,
                       help="center-loss weight")
        p.add_argument("--alpha", type=float, help="center update rate")
        p.add_argument("--lr", type=float)
        p.add_argument("--epochs-stage1", type=int)
        p.add_argument("--epochs-stage2", type=int)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--snr-list", help="comma-separated SNRs in dB")
        p.add_argument("--out-dir")
        p.add_argument("--dataset")
        p.add_argument("--checkpoint")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _merged_config(args)
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DatasetFormatError, CheckpointFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
