"""Patch encoders: soft threshold (ST), triangle k-means (TK), soft assignment
(SA), localized soft assignment (LSA) and rectified sparse coding (SC)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictlearn import Dictionary
from .lasso import DEFAULT_MAX_ITER, DEFAULT_TOL, lasso_solve_batch
from .patchgrid import PatchMatrix

METHODS = ("st", "tk", "sa", "lsa", "sc")


@dataclass(frozen=True)
class EncoderSpec:
    method: str = "st"
    st_fraction: float = 0.25
    beta: float = 10.0
    k: int = 10
    sc_lambda: float = 0.25
    lsa_local_denominator: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", self.method.lower())
        if self.method not in METHODS:
            raise ValueError(f"unknown encoder {self.method!r}; choose from {METHODS}")
        if not 0 < self.st_fraction < 1:
            raise ValueError("st_fraction must lie in (0, 1)")
        if self.beta <= 0 or self.sc_lambda <= 0 or self.k < 1:
            raise ValueError("beta and sc_lambda must be > 0 and k >= 1")


@dataclass
class CodeMatrix:
    data: np.ndarray  # n x N
    positions: np.ndarray  # N x 2


def st_threshold(D: np.ndarray, X: np.ndarray, fraction: float = 0.25) -> float:
    """``fraction * max(D^T X)`` over the whole batch."""
    if X.shape[1] == 0:
        return 0.0
    return fraction * float(np.max(D.T @ X))


def sq_distances(D: np.ndarray, X: np.ndarray) -> np.ndarray:
    """n x N squared Euclidean distances between bases and patches."""
    d2 = np.sum(D * D, axis=0)[:, None] - 2.0 * (D.T @ X) + np.sum(X * X, axis=0)[None, :]
    return np.maximum(d2, 0.0)


def _soft_assign(d2: np.ndarray, beta: float) -> np.ndarray:
    logits = -beta * d2
    logits -= logits.max(axis=0, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=0, keepdims=True)


def knn_mask(d2: np.ndarray, k: int) -> np.ndarray:
    """Boolean n x N mask of each column's k nearest bases, lower index first on ties."""
    order = np.argsort(d2, axis=0, kind="stable")[:k]
    mask = np.zeros(d2.shape, dtype=bool)
    np.put_along_axis(mask, order, True, axis=0)
    return mask


def encode_matrix(D: np.ndarray, X: np.ndarray, spec: EncoderSpec, threshold: float | None = None) -> np.ndarray:
    """Encode the columns of X against basis D; returns the n x N code matrix.

    ``threshold`` overrides the ST threshold that would otherwise be computed
    from this batch.
    """
    if D.shape[0] != X.shape[0]:
        raise ValueError(f"dictionary dimension {D.shape[0]} != patch dimension {X.shape[0]}")
    method = spec.method
    if method == "st":
        s = st_threshold(D, X, spec.st_fraction) if threshold is None else threshold
        return np.maximum(D.T @ X - s, 0.0)
    if method == "tk":
        dist = np.sqrt(sq_distances(D, X))
        return np.maximum(dist.mean(axis=0, keepdims=True) - dist, 0.0)
    if method == "sa":
        return _soft_assign(sq_distances(D, X), spec.beta)
    if method == "lsa":
        d2 = sq_distances(D, X)
        if spec.k > D.shape[1]:
            raise ValueError(f"k={spec.k} exceeds the {D.shape[1]} bases")
        mask = knn_mask(d2, spec.k)
        if spec.lsa_local_denominator:
            logits = np.where(mask, -spec.beta * d2, -np.inf)
            logits -= logits.max(axis=0, keepdims=True)
            e = np.exp(logits)
            return e / e.sum(axis=0, keepdims=True)
        return np.where(mask, _soft_assign(d2, spec.beta), 0.0)
    alpha = lasso_solve_batch(D, X, spec.sc_lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)
    return np.maximum(alpha, 0.0)


def encode(dictionary: Dictionary, patches: PatchMatrix, spec: EncoderSpec, threshold: float | None = None) -> CodeMatrix:
    return CodeMatrix(encode_matrix(dictionary.basis, patches.data, spec, threshold), patches.positions.copy())
