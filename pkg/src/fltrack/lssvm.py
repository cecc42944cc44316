"""Closed-form linear least-squares SVM and the first/recent frame reservoir."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg

DEFAULT_GAMMA = 1e-2


@dataclass
class LinearModel:
    w: np.ndarray
    b: float
    gamma: float = DEFAULT_GAMMA

    def predict(self, features: np.ndarray) -> np.ndarray | float:
        return predict(self, features)


def train(features, labels, gamma: float = DEFAULT_GAMMA, bias: str = "corrected") -> LinearModel:
    """Fit f(x) = w'x + b minimizing sum (f(x_i) - y_i)^2 + gamma ||w||^2.

    ``w = (2 N+ N- / N^2) (S + gamma/N I)^-1 (mu+ - mu-)`` with S the covariance
    about the global mean. ``bias="corrected"`` uses ``b = (N+ - N-)/N - mu'w``,
    the stationary point in b; ``bias="verbatim"`` uses ``N+ N- / N - mu'w``.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(labels)
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if len(y) != len(X):
        raise ValueError(f"{len(X)} features but {len(y)} labels")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    pos, neg = y > 0, y < 0
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("training needs at least one sample of each class")
    N = n_pos + n_neg
    mu = X.mean(axis=0)
    diff = X[pos].mean(axis=0) - X[neg].mean(axis=0)
    Xc = X - mu
    M = (Xc.T @ Xc) / N
    M[np.diag_indices_from(M)] += gamma / N
    try:
        v = linalg.cho_solve(linalg.cho_factor(M, check_finite=False), diff, check_finite=False)
    except linalg.LinAlgError:
        warnings.warn("LS-SVM system not positive definite; falling back to least squares", RuntimeWarning)
        v = linalg.lstsq(M, diff)[0]
    w = (2.0 * n_pos * n_neg / N**2) * v
    if bias == "corrected":
        b = (n_pos - n_neg) / N - mu @ w
    elif bias == "verbatim":
        b = n_pos * n_neg / N - mu @ w
    else:
        raise ValueError(f"unknown bias mode {bias!r}")
    return LinearModel(w, float(b), gamma)


def predict(model: LinearModel, features) -> np.ndarray | float:
    """w'x + b for one feature vector or each row of a matrix."""
    X = np.asarray(features, dtype=np.float64)
    if X.shape[-1] != len(model.w):
        raise ValueError(f"feature length {X.shape[-1]} != model dimension {len(model.w)}")
    scores = X @ model.w + model.b
    return float(scores) if X.ndim == 1 else scores


@dataclass
class Reservoir:
    """Labelled samples kept from the first ``head_keep`` and the most recent
    ``tail_keep`` frames; frames in between are dropped as soon as they age out."""

    head_keep: int = 10
    tail_keep: int = 20
    entries: dict[int, list[tuple[Any, int]]] = field(default_factory=dict)
    _order: list[int] = field(default_factory=list)
    _head: list[int] = field(default_factory=list)

    def push(self, frame_index: int, samples) -> "Reservoir":
        if self._order and frame_index <= self._order[-1]:
            raise ValueError(f"frame index {frame_index} not after {self._order[-1]}")
        self.entries[frame_index] = list(samples)
        self._order.append(frame_index)
        if len(self._head) < self.head_keep:
            self._head.append(frame_index)
        keep = set(self._head) | set(self._order[-self.tail_keep :] if self.tail_keep else [])
        for idx in [i for i in self._order if i not in keep]:
            del self.entries[idx]
        self._order = [i for i in self._order if i in keep]
        return self

    def frames(self) -> list[int]:
        return list(self._order)

    def replace(self, frame_index: int, samples) -> None:
        """Swap the stored samples of a retained frame (e.g. after re-encoding)."""
        if frame_index not in self.entries:
            raise KeyError(frame_index)
        self.entries[frame_index] = list(samples)

    def training_set(self) -> tuple[list, list[int]]:
        feats, labels = [], []
        for idx in self._order:
            for f, y in self.entries[idx]:
                feats.append(f)
                labels.append(y)
        return feats, labels


def reservoir_push(res: Reservoir, frame_index: int, samples) -> Reservoir:
    return res.push(frame_index, samples)


def reservoir_training_set(res: Reservoir):
    return res.training_set()
