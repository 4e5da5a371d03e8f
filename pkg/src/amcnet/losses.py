"""Softmax cross-entropy, the center term, and their gradients.

The training objective is ``L = L_S + lambda * L_C`` where ``L_S`` is
softmax cross-entropy over the logits and ``L_C`` penalizes the distance
between each feature vector and its class center:

    L_C = 1/2 * sum_i ||x_i - c_{y_i}||^2

Class centers are not optimized by gradient descent on ``L``; they move
by their own averaged update rule (see :func:`center_update`) scaled by
a separate rate ``alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Centers",
    "LossConfig",
    "softmax",
    "cross_entropy",
    "softmax_ce_backward",
    "center_loss",
    "center_loss_grad",
    "center_update",
    "joint_loss",
]

_PROB_FLOOR = 1e-12


@dataclass
class Centers:
    """One center per class plus the center learning rate."""

    c: np.ndarray  # (n_classes, feature_dim)
    alpha: float = 0.5

    def __post_init__(self):
        self.c = np.asarray(self.c)
        if self.c.ndim != 2:
            raise ValueError(f"centers must be 2-D, got shape {self.c.shape}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")

    @classmethod
    def zeros(cls, n_classes, feature_dim, alpha=0.5, dtype=np.float32):
        return cls(c=np.zeros((n_classes, feature_dim), dtype=dtype), alpha=alpha)


@dataclass
class LossConfig:
    lam: float = 0.01
    reduction: str = "mean"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.reduction not in ("mean", "sum"):
            raise ValueError(f"unknown reduction {self.reduction!r}")


def _check_labels(labels, n_classes, batch):
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {batch}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels out of range [0, {n_classes})")
    return labels.astype(np.int64)


def softmax(logits):
    """Row-wise softmax, stabilized by subtracting the row max."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs, labels, reduction="mean"):
    """Negative log-likelihood of the true class, given probability rows."""
    labels = _check_labels(labels, probs.shape[1], probs.shape[0])
    picked = probs[np.arange(len(labels)), labels]
    losses = -np.log(np.maximum(picked, _PROB_FLOOR))
    return float(losses.mean() if reduction == "mean" else losses.sum())


def _ce_grad_from_probs(probs, labels, reduction):
    grad = probs.copy()
    grad[np.arange(len(labels)), labels] -= 1.0
    if reduction == "mean":
        grad /= max(len(labels), 1)
    return grad


def softmax_ce_backward(logits, labels, reduction="mean"):
    """Gradient of cross-entropy-of-softmax wrt the logits."""
    labels = _check_labels(labels, logits.shape[1], logits.shape[0])
    return _ce_grad_from_probs(softmax(logits), labels, reduction)


def center_loss(features, labels, centers, reduction="mean"):
    """1/2 the summed squared distance of each feature to its class center."""
    labels = _check_labels(labels, centers.c.shape[0], features.shape[0])
    diff = features - centers.c[labels]
    total = 0.5 * float(np.sum(diff * diff))
    if reduction == "mean":
        total /= max(features.shape[0], 1)
    return total


def center_loss_grad(features, labels, centers, reduction="mean"):
    """Gradient of the center term wrt the features: x_i - c_{y_i}."""
    labels = _check_labels(labels, centers.c.shape[0], features.shape[0])
    grad = features - centers.c[labels]
    if reduction == "mean":
        grad = grad / max(features.shape[0], 1)
    return grad


def center_update(features, labels, centers):
    """One averaged center step; returns a new :class:`Centers`.

    For each class j present in the batch:

        delta_j = sum_{i: y_i = j} (c_j - x_i) / (1 + count_j)
        c_j    <- c_j - alpha * delta_j

    Classes absent from the batch keep their center. The raw batch
    features are used as-is regardless of any loss reduction.
    """
    n_classes, dim = centers.c.shape
    labels = _check_labels(labels, n_classes, features.shape[0])
    counts = np.bincount(labels, minlength=n_classes).astype(centers.c.dtype)
    sums = np.zeros_like(centers.c)
    np.add.at(sums, labels, centers.c.dtype.type(1.0) * features)
    delta = (counts[:, None] * centers.c - sums) / (1.0 + counts[:, None])
    new_c = centers.c - centers.c.dtype.type(centers.alpha) * delta
    return Centers(c=new_c.astype(centers.c.dtype, copy=False), alpha=centers.alpha)


def joint_loss(logits, features, labels, centers, config):
    """Combined loss; returns (scalar, grad wrt logits, grad wrt features).

    The feature gradient carries only the center term (already scaled by
    ``config.lam``); the logits gradient carries only the softmax term.
    """
    total, _, _, grad_logits, grad_features = _joint_parts(
        logits, features, labels, centers, config
    )
    return total, grad_logits, grad_features


def _joint_parts(logits, features, labels, centers, config):
    """Like :func:`joint_loss` but also exposing the two addends."""
    labels = _check_labels(labels, logits.shape[1], logits.shape[0])
    probs = softmax(logits)
    ls = cross_entropy(probs, labels, config.reduction)
    grad_logits = _ce_grad_from_probs(probs, labels, config.reduction)
    if config.lam > 0.0:
        lc = config.lam * center_loss(features, labels, centers, config.reduction)
        grad_features = config.lam * center_loss_grad(
            features, labels, centers, config.reduction
        )
        grad_features = grad_features.astype(features.dtype, copy=False)
    else:
        lc = 0.0
        grad_features = np.zeros_like(features)
    return ls + lc, ls, lc, grad_logits.astype(logits.dtype, copy=False), grad_features
