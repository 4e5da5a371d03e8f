"""Mini-batch SGD with momentum/weight decay and two-stage training.

Stage S1 minimizes the joint objective ``L_S + lambda * L_C`` and moves
the class centers after every batch; stage S2 continues from the S1
weights under the softmax term alone with centers frozen. Within one
iteration centers are updated before the weights, matching the order of
the underlying update rule.

Reproducibility: every random choice derives from ``config.seed``
through fixed named streams (split, init, per-epoch batch order), so a
(seed, config, dataset) triple yields bit-identical reports and
checkpoints across runs.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import save_checkpoint
from .losses import Centers, LossConfig, _joint_parts, center_update
from .network import build_network
from .signals import Dataset

__all__ = [
    "TrainConfig",
    "EpochRecord",
    "TrainingDivergedError",
    "stratified_split",
    "dataset_arrays",
    "epoch_batches",
    "sgd_step",
    "train_stage",
    "train_two_stage",
    "write_report",
]

# stream ids under the user seed, so the same seed never reuses a stream
_STREAM_SPLIT = 1
_STREAM_INIT = 2
_STREAM_BATCHES = 3

_REPORT_COLUMNS = (
    "stage",
    "epoch",
    "loss_total",
    "loss_softmax",
    "loss_center",
    "train_acc",
    "test_acc",
    "seconds",
)

_BASE_CENTER_LR = 1e-4


class TrainingDivergedError(RuntimeError):
    """Raised when a non-finite loss shows up during training."""


@dataclass
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs_stage1: int = 40
    epochs_stage2: int = 5
    batch_size: int = 128
    center_lr: float = 1e-4
    lam: float = 0.01
    alpha: float = 0.5
    seed: int = 0
    reduction: str = "mean"
    train_frac: float = 0.8
    lr_decay_epochs: int = 0
    lr_decay_factor: float = 0.1
    early_stop_patience: int = 0
    record_timing: bool = False

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.epochs_stage1 < 0 or self.epochs_stage2 < 0:
            raise ValueError("epoch counts must be >= 0")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.center_lr < 0:
            raise ValueError(f"center_lr must be >= 0, got {self.center_lr}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.reduction not in ("mean", "sum"):
            raise ValueError(f"unknown reduction {self.reduction!r}")
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError(f"train_frac must be in (0, 1), got {self.train_frac}")

    @property
    def effective_alpha(self):
        """Center step size: alpha scaled by center_lr relative to 1e-4."""
        return self.alpha * (self.center_lr / _BASE_CENTER_LR)


@dataclass
class EpochRecord:
    stage: str
    epoch: int
    loss_total: float
    loss_softmax: float
    loss_center: float
    train_acc: float
    test_acc: float
    seconds: float = 0.0


@dataclass
class SplitArrays:
    """Dense train/test tensors materialized from a frame dataset."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    snr_test: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))


def stratified_split(dataset, train_frac, rng):
    """Shuffled per-(class, SNR) split; returns (train_idx, test_idx)."""
    groups = {}
    for i, frame in enumerate(dataset.frames):
        groups.setdefault((frame.class_id, frame.snr_db), []).append(i)
    train_idx, test_idx = [], []
    for key in sorted(groups):
        members = np.array(groups[key])
        order = rng.permutation(len(members))
        cut = int(len(members) * train_frac)
        train_idx.extend(members[order[:cut]])
        test_idx.extend(members[order[cut:]])
    return np.array(sorted(train_idx)), np.array(sorted(test_idx))


def dataset_arrays(dataset, indices=None):
    """Stack frames into (n, 2, N) float32 plus label and SNR vectors."""
    frames = dataset.frames
    if indices is not None:
        frames = [frames[i] for i in indices]
    if not frames:
        raise ValueError("no frames selected")
    x = np.stack([f.samples for f in frames]).astype(np.float32, copy=False)
    y = np.array([f.class_id for f in frames], dtype=np.int64)
    snr = np.array([f.snr_db for f in frames], dtype=np.int64)
    return x, y, snr


def epoch_batches(dataset, batch_size, rng):
    """Shuffled index batches covering every sample once; short tail kept.

    ``dataset`` may be anything with a length, or a plain sample count.
    """
    n = dataset if isinstance(dataset, (int, np.integer)) else len(dataset)
    if batch_size > n:
        raise ValueError(f"batch_size {batch_size} exceeds dataset size {n}")
    perm = rng.permutation(n)
    return [perm[i : i + batch_size] for i in range(0, n, batch_size)]


def sgd_step(params, grads, state, lr, momentum, weight_decay, exempt=frozenset()):
    """In-place momentum update; ``exempt`` names skip weight decay.

    g' = g + weight_decay * p; v <- momentum * v + g'; p <- p - lr * v.
    """
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"{name}: grad shape {g.shape} != param {p.shape}")
        if weight_decay and name not in exempt:
            g = g + p.dtype.type(weight_decay) * p
        v = state.setdefault(name, np.zeros_like(p))
        v *= p.dtype.type(momentum)
        v += g
        p -= p.dtype.type(lr) * v


def _batched_logits(net, x, batch=512):
    outs = []
    for i in range(0, len(x), batch):
        _, logits, _ = net.forward(x[i : i + batch], train=False)
        outs.append(logits)
    return np.concatenate(outs)


def _stage_lr(config, stage_epoch):
    if config.lr_decay_epochs > 0:
        return config.lr * config.lr_decay_factor ** (
            stage_epoch // config.lr_decay_epochs
        )
    return config.lr


def train_stage(net, centers, split, config, stage, opt_state=None, epoch_offset=0):
    """Run one stage; mutates net parameters, returns (centers, records).

    ``stage`` is "S1" (joint loss, centers move) or "S2" (softmax only,
    centers frozen). Epoch indices in the records are global, starting
    at ``epoch_offset``.
    """
    if stage not in ("S1", "S2"):
        raise ValueError(f"unknown stage {stage!r}")
    epochs = config.epochs_stage1 if stage == "S1" else config.epochs_stage2
    lam = config.lam if stage == "S1" else 0.0
    loss_cfg = LossConfig(lam=lam, reduction=config.reduction)
    params = net.trainable()
    exempt = net.decay_exempt()
    if opt_state is None:
        opt_state = {}
    records = []
    n_train = len(split.y_train)
    best_acc, since_best = -1.0, 0
    for stage_epoch in range(epochs):
        t0 = time.perf_counter()
        rng = np.random.default_rng(
            np.random.SeedSequence(
                [config.seed, _STREAM_BATCHES, 1 if stage == "S1" else 2, stage_epoch]
            )
        )
        lr = _stage_lr(config, stage_epoch)
        sums = np.zeros(3)
        correct = 0
        for b, idx in enumerate(epoch_batches(n_train, config.batch_size, rng)):
            xb, yb = split.x_train[idx], split.y_train[idx]
            features, logits, cache = net.forward(xb, train=True)
            total, ls, lc, grad_logits, grad_features = _joint_parts(
                logits, features, yb, centers, loss_cfg
            )
            if not np.isfinite(total):
                raise TrainingDivergedError(
                    f"non-finite loss in stage {stage}, epoch "
                    f"{epoch_offset + stage_epoch}, batch {b}"
                )
            grads, _ = net.backward(cache, grad_logits, grad_features)
            if stage == "S1":
                centers = center_update(features, yb, centers)
            sgd_step(
                params, grads, opt_state, lr, config.momentum,
                config.weight_decay, exempt,
            )
            scale = len(idx) if config.reduction == "mean" else 1
            sums += np.array([total, ls, lc]) * scale
            correct += int((logits.argmax(axis=1) == yb).sum())
        test_logits = _batched_logits(net, split.x_test)
        test_acc = float((test_logits.argmax(axis=1) == split.y_test).mean())
        seconds = time.perf_counter() - t0 if config.record_timing else 0.0
        records.append(
            EpochRecord(
                stage=stage,
                epoch=epoch_offset + stage_epoch,
                loss_total=float(sums[0] / n_train),
                loss_softmax=float(sums[1] / n_train),
                loss_center=float(sums[2] / n_train),
                train_acc=correct / n_train,
                test_acc=test_acc,
                seconds=seconds,
            )
        )
        if config.early_stop_patience > 0:
            if test_acc > best_acc:
                best_acc, since_best = test_acc, 0
            else:
                since_best += 1
                if since_best >= config.early_stop_patience:
                    break
    return centers, records


def split_dataset(dataset, config):
    """Stratified split of a Dataset into dense train/test arrays."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _STREAM_SPLIT]))
    train_idx, test_idx = stratified_split(dataset, config.train_frac, rng)
    x_train, y_train, _ = dataset_arrays(dataset, train_idx)
    x_test, y_test, snr_test = dataset_arrays(dataset, test_idx)
    return SplitArrays(
        x_train=x_train, y_train=y_train,
        x_test=x_test, y_test=y_test, snr_test=snr_test,
    )


def _checkpoint_state(net, centers):
    state = net.state_dict()
    state["centers.c"] = centers.c
    return state


def train_two_stage(dataset, config, out_dir=None):
    """Full two-stage run; returns (net, centers, records).

    With ``out_dir`` set, writes ckpt_s1.bin after stage S1 and, when
    ``epochs_stage2 > 0``, ckpt_s2.bin after stage S2.
    """
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    if isinstance(dataset, Dataset):
        split = split_dataset(dataset, config)
        n_classes = len(dataset.class_names)
    else:
        split = dataset
        n_classes = int(split.y_train.max()) + 1 if len(split.y_train) else 1
        n_classes = max(n_classes, int(split.y_test.max()) + 1)
    init_rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, _STREAM_INIT])
    )
    net = build_network(init_rng, n_classes=n_classes)
    centers = Centers.zeros(
        n_classes, net.feature_dim, alpha=config.effective_alpha
    )
    centers, records = train_stage(net, centers, split, config, "S1")
    if out_dir is not None:
        save_checkpoint(
            _checkpoint_state(net, centers), os.path.join(out_dir, "ckpt_s1.bin")
        )
    if config.epochs_stage2 > 0:
        centers, s2_records = train_stage(
            net, centers, split, config, "S2",
            opt_state=None, epoch_offset=config.epochs_stage1,
        )
        records.extend(s2_records)
        if out_dir is not None:
            save_checkpoint(
                _checkpoint_state(net, centers),
                os.path.join(out_dir, "ckpt_s2.bin"),
            )
    return net, centers, records


def write_report(records, path):
    """Write epoch records as CSV with fixed float formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.stage,
                    r.epoch,
                    f"{r.loss_total:.6f}",
                    f"{r.loss_softmax:.6f}",
                    f"{r.loss_center:.6f}",
                    f"{r.train_acc:.6f}",
                    f"{r.test_acc:.6f}",
                    f"{r.seconds:.3f}",
                ]
            )


def read_report(path):
    """Read a report CSV back into EpochRecord objects."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(_REPORT_COLUMNS):
            raise ValueError(f"unexpected report columns: {reader.fieldnames}")
        for row in reader:
            records.append(
                EpochRecord(
                    stage=row["stage"],
                    epoch=int(row["epoch"]),
                    loss_total=float(row["loss_total"]),
                    loss_softmax=float(row["loss_softmax"]),
                    loss_center=float(row["loss_center"]),
                    train_acc=float(row["train_acc"]),
                    test_acc=float(row["test_acc"]),
                    seconds=float(row["seconds"]),
                )
            )
    return records
