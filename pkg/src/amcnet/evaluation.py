"""Prediction, accuracy/confusion metrics, feature export, PCA, dispersion.

All functions here run the network in inference mode and never mutate
its parameters. PCA is fit on whatever features it is handed; the
feature/PCA commands operate on the dataset file they are given.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .signals import Dataset

__all__ = [
    "Metrics",
    "FeatureDump",
    "predict",
    "evaluate",
    "export_features",
    "pca_2d",
    "intra_class_dispersion",
    "write_metrics_csv",
    "write_confusion_csv",
    "write_features_csv",
    "write_pca_csv",
]

_EVAL_BATCH = 512


@dataclass
class Metrics:
    overall_accuracy: float
    per_snr_accuracy: dict
    confusion: np.ndarray  # (K, K) counts, rows true, cols predicted


@dataclass
class FeatureDump:
    class_ids: np.ndarray  # (n,)
    snr_db: np.ndarray  # (n,)
    features: np.ndarray  # (n, d)


def _frames_to_arrays(frames):
    if isinstance(frames, Dataset):
        x = np.stack([f.samples for f in frames.frames])
        y = np.array([f.class_id for f in frames.frames], dtype=np.int64)
        snr = np.array([f.snr_db for f in frames.frames], dtype=np.int64)
        return x, y, snr
    x = np.asarray(frames)
    return x, None, None


def _batched_forward(net, x):
    feats, logits = [], []
    for i in range(0, len(x), _EVAL_BATCH):
        f, l, _ = net.forward(x[i : i + _EVAL_BATCH], train=False)
        feats.append(f)
        logits.append(l)
    return np.concatenate(feats), np.concatenate(logits)


def predict(net, frames):
    """Predicted class ids (argmax over logits; ties go to the lowest id)."""
    x, _, _ = _frames_to_arrays(frames)
    _, logits = _batched_forward(net, x)
    return logits.argmax(axis=1)


def evaluate(net, dataset):
    """Accuracy, per-SNR accuracy, and the confusion matrix for a dataset."""
    if isinstance(dataset, Dataset):
        if not dataset.frames:
            raise ValueError("dataset is empty")
        x, y, snr = _frames_to_arrays(dataset)
        n_classes = len(dataset.class_names)
    else:
        x, y, snr = dataset
        if len(x) == 0:
            raise ValueError("dataset is empty")
        n_classes = int(max(y.max(), 0)) + 1
    pred = predict(net, x)
    n_classes = max(n_classes, net.n_classes)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    per_snr = {}
    for s in sorted(set(int(v) for v in snr)):
        mask = snr == s
        per_snr[s] = float((pred[mask] == y[mask]).mean())
    overall = float(np.trace(confusion) / confusion.sum())
    return Metrics(
        overall_accuracy=overall, per_snr_accuracy=per_snr, confusion=confusion
    )


def export_features(net, dataset):
    """Inference-mode middle-layer feature vectors for every frame.

    ``dataset`` is a Dataset or an (x, labels, snrs) array triple.
    """
    if isinstance(dataset, Dataset):
        x, y, snr = _frames_to_arrays(dataset)
    else:
        x, y, snr = dataset
    if y is None:
        raise ValueError("export_features needs labeled frames")
    feats, _ = _batched_forward(net, x)
    return FeatureDump(
        class_ids=np.asarray(y), snr_db=np.asarray(snr), features=feats
    )


def _top_eigenvector(cov, start, max_iter=200000, tol=1e-13):
    v = start / np.linalg.norm(start)
    for _ in range(max_iter):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            return None, 0.0
        w /= norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    return v, float(v @ cov @ v)


def pca_2d(features):
    """Project onto the top-2 principal components (n x 2).

    Components come from power iteration with deflation on the feature
    covariance, ordered by descending eigenvalue, each signed so its
    largest-magnitude loading is positive.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ValueError(f"need at least 3 samples in a 2-D array, got {x.shape}")
    centered = x - x.mean(axis=0)
    if not np.any(np.abs(centered) > 0):
        raise ValueError("all points identical: covariance has rank 0")
    cov = centered.T @ centered / (x.shape[0] - 1)
    d = cov.shape[0]
    start_rng = np.random.default_rng(180451)
    components = []
    for _ in range(2):
        v, eigval = _top_eigenvector(cov, start_rng.standard_normal(d))
        if v is None or eigval <= 0:
            # deflated matrix vanished: data is rank 1, pick any unit
            # vector orthogonal to the first component
            prev = components[0]
            v = np.zeros(d)
            v[np.argmin(np.abs(prev))] = 1.0
            v -= prev * (prev @ v)
            v /= np.linalg.norm(v)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        components.append(v)
        cov = cov - eigval * np.outer(v, v) if eigval > 0 else cov
    return centered @ np.stack(components, axis=1)


def intra_class_dispersion(dump, classes=None):
    """Mean distance of each class's features to its centroid.

    Returns (per-class dict, grand mean over those classes). By default
    the classes are those present in the dump; passing ``classes``
    explicitly raises a ValueError naming any class with no samples.
    """
    present = sorted(int(c) for c in set(dump.class_ids))
    if classes is None:
        classes = present
    per_class = {}
    for c in classes:
        mask = dump.class_ids == c
        if not mask.any():
            raise ValueError(f"class {c} has no samples in the dump")
        feats = dump.features[mask].astype(np.float64)
        centroid = feats.mean(axis=0)
        per_class[int(c)] = float(
            np.linalg.norm(feats - centroid, axis=1).mean()
        )
    mean = float(np.mean(list(per_class.values())))
    return per_class, mean


def write_metrics_csv(metrics, path):
    """Per-SNR accuracy rows (ascending) plus a final overall row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "accuracy"])
        for snr in sorted(metrics.per_snr_accuracy):
            writer.writerow([snr, f"{metrics.per_snr_accuracy[snr]:.6f}"])
        writer.writerow(["overall", f"{metrics.overall_accuracy:.6f}"])


def write_confusion_csv(metrics, class_names, path):
    """K x K counts; rows are true classes, columns predicted."""
    k = metrics.confusion.shape[0]
    if len(class_names) != k:
        raise ValueError(
            f"{len(class_names)} names for a {k}x{k} confusion matrix"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true_class", *class_names])
        for i, name in enumerate(class_names):
            writer.writerow([name, *metrics.confusion[i].tolist()])


def write_features_csv(dump, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        d = dump.features.shape[1]
        writer.writerow(["class", "snr", *[f"f{i}" for i in range(d)]])
        for cid, snr, row in zip(dump.class_ids, dump.snr_db, dump.features):
            writer.writerow([int(cid), int(snr), *[f"{v:.6f}" for v in row]])


def write_pca_csv(dump, coords, path):
    if len(coords) != len(dump.class_ids):
        raise ValueError("coordinate count does not match the dump")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "snr", "pc1", "pc2"])
        for cid, snr, (p1, p2) in zip(dump.class_ids, dump.snr_db, coords):
            writer.writerow([int(cid), int(snr), f"{p1:.6f}", f"{p2:.6f}"])
