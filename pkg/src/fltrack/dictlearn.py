"""Dictionary construction and maintenance.

Online dictionary learning keeps the sufficient statistics A (n x n) and
B (m x n) and updates each basis column by block-coordinate descent with a
projection onto the unit ball. K-means and random patch sampling are the
offline baselines.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lasso import DEFAULT_MAX_ITER, DEFAULT_TOL, default_lambda, lasso_solve_batch

DEAD_COLUMN_EPS = 1e-8
ODL_BATCH = 256
KMEANS_MAX_ITER = 50
DICT_MAGIC = b"FTDICT01"
INIT_METHODS = ("odl", "kmeans", "random_sample")


@dataclass
class Dictionary:
    basis: np.ndarray  # m x n

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    def copy(self) -> "Dictionary":
        return Dictionary(self.basis.copy())


@dataclass
class OdlState:
    A: np.ndarray
    B: np.ndarray
    t: int = 0
    eta: int = ODL_BATCH

    @classmethod
    def zeros(cls, m: int, n: int, eta: int = ODL_BATCH) -> "OdlState":
        return cls(np.zeros((n, n)), np.zeros((m, n)), 0, eta)

    def copy(self) -> "OdlState":
        return OdlState(self.A.copy(), self.B.copy(), self.t, self.eta)


@dataclass
class UpdatePolicy:
    overlap_threshold: float = 0.9
    top_fraction: float = 0.5
    prev_top_set: frozenset = field(default_factory=frozenset)


def surrogate(D: np.ndarray, A: np.ndarray, B: np.ndarray) -> float:
    """0.5 Tr(D^T D A) - Tr(D^T B), the quantity the column updates minimize."""
    return 0.5 * float(np.sum((D.T @ D) * A)) - float(np.sum(D * B))


def unit_columns(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0] = 1.0
    return X / norms


def project_columns(X: np.ndarray) -> np.ndarray:
    """Scale down columns with norm above 1; shorter columns are kept."""
    return X / np.maximum(np.linalg.norm(X, axis=0), 1.0)


def update_columns(D: np.ndarray, A: np.ndarray, B: np.ndarray, eps: float = DEAD_COLUMN_EPS) -> np.ndarray:
    """One sequential pass of projected column updates; returns a new basis.

    Column j moves to ``(b_j - D a_j) / A[j, j] + d_j`` projected onto the unit
    ball, using the columns already updated earlier in the pass.
    """
    D = D.copy()
    for j in range(D.shape[1]):
        ajj = A[j, j]
        if ajj <= eps:
            continue
        u = (B[:, j] - D @ A[:, j]) / ajj + D[:, j]
        D[:, j] = u / max(np.linalg.norm(u), 1.0)
    return D


def odl_step(
    dictionary: Dictionary,
    state: OdlState,
    batch: np.ndarray,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[Dictionary, OdlState]:
    """One round: sparse-code the batch, fold it into (A, B), update every column."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] != dictionary.m or batch.shape[1] < 1:
        raise ValueError(f"batch shape {batch.shape} incompatible with {dictionary.m}-row dictionary")
    if state.A.shape != (dictionary.n, dictionary.n) or state.B.shape != (dictionary.m, dictionary.n):
        raise ValueError("ODL state shape does not match the dictionary")
    codes = lasso_solve_batch(dictionary.basis, batch, lam, tol, max_iter)
    eta = batch.shape[1]
    A = state.A + (codes @ codes.T) / eta
    B = state.B + (batch @ codes.T) / eta
    D = update_columns(dictionary.basis, A, B)
    return Dictionary(D), OdlState(A, B, state.t + 1, state.eta)


def odl_epoch(dictionary, state, patches, lam, rng, batch_size=ODL_BATCH, **lasso_kw):
    """One shuffled pass over the columns of ``patches`` in mini-batches."""
    order = rng.permutation(patches.shape[1])
    for start in range(0, len(order), batch_size):
        dictionary, state = odl_step(dictionary, state, patches[:, order[start : start + batch_size]], lam, **lasso_kw)
    return dictionary, state


def kmeans_pp_seeds(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding over the columns of X; returns column indices."""
    N = X.shape[1]
    chosen = [int(rng.integers(N))]
    d2 = np.sum((X - X[:, chosen[0], None]) ** 2, axis=0)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            remaining = np.setdiff1d(np.arange(N), chosen)
            chosen.append(int(rng.choice(remaining)))
        else:
            chosen.append(int(rng.choice(N, p=d2 / total)))
        d2 = np.minimum(d2, np.sum((X - X[:, chosen[-1], None]) ** 2, axis=0))
    return np.array(chosen)


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = KMEANS_MAX_ITER) -> np.ndarray:
    """Lloyd's algorithm on the columns of X; returns m x k centroids.

    Empty clusters keep their previous centroid.
    """
    C = X[:, kmeans_pp_seeds(X, k, rng)].copy()
    x2 = np.sum(X * X, axis=0)
    labels = None
    for _ in range(max_iter):
        d2 = x2[None, :] - 2.0 * (C.T @ X) + np.sum(C * C, axis=0)[:, None]
        new_labels = np.argmin(d2, axis=0)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                C[:, j] = X[:, members].mean(axis=1)
    return C


def init_dictionary(
    method: str,
    patches: np.ndarray,
    n: int,
    epochs: int = 1,
    lam: float | None = None,
    seed: int = 0,
    batch_size: int = ODL_BATCH,
) -> tuple[Dictionary, OdlState]:
    """Build an n-column dictionary from contrast-normalized patch columns.

    ``odl`` starts from n random patches and runs ``epochs`` shuffled passes of
    online learning; ``kmeans`` and ``random_sample`` return a zeroed ODL state.
    """
    patches = np.asarray(patches, dtype=np.float64)
    m, N = patches.shape
    if N < n:
        raise ValueError(f"need at least {n} patches, got {N}")
    rng = np.random.default_rng(seed)
    state = OdlState.zeros(m, n, batch_size)
    if method == "kmeans":
        return Dictionary(project_columns(kmeans(patches, n, rng))), state
    if method not in ("odl", "random_sample", "rs"):
        raise ValueError(f"unknown dictionary method {method!r}")
    D = Dictionary(unit_columns(patches[:, rng.choice(N, size=n, replace=False)]))
    if method == "odl":
        lam = default_lambda(m) if lam is None else lam
        for _ in range(epochs):
            D, state = odl_epoch(D, state, patches, lam, rng, batch_size)
    return D, state


# ---------------------------------------------------------------------------
# Appearance-change trigger


def basis_weights(codes: np.ndarray) -> np.ndarray:
    """Row L2 norms of the n x N code matrix, normalized to sum to one."""
    norms = np.linalg.norm(codes, axis=1)
    total = norms.sum()
    if total <= 0:
        return np.full(codes.shape[0], 1.0 / codes.shape[0])
    return norms / total


def top_set(weights: np.ndarray, fraction: float = 0.5) -> frozenset:
    size = math.ceil(len(weights) * fraction)
    # stable sort on -w keeps lower indices first among ties
    order = np.argsort(-np.asarray(weights), kind="stable")
    return frozenset(int(i) for i in order[:size])


def top_overlap(prev: frozenset, curr: frozenset) -> float:
    return len(prev & curr) / len(curr)


def should_update(policy: UpdatePolicy, weights: np.ndarray) -> tuple[bool, UpdatePolicy]:
    """Compare the top half of the basis ranking with the previous frame's."""
    curr = top_set(weights, policy.top_fraction)
    fire = bool(policy.prev_top_set) and top_overlap(policy.prev_top_set, curr) < policy.overlap_threshold
    return fire, UpdatePolicy(policy.overlap_threshold, policy.top_fraction, curr)


# ---------------------------------------------------------------------------
# FTDICT01 files: 8-byte magic, m and n as little-endian int32, then m*n
# little-endian float64 in column-major order.


def save_dictionary(path, dictionary: Dictionary) -> None:
    with open(path, "wb") as fh:
        fh.write(DICT_MAGIC + struct.pack("<ii", dictionary.m, dictionary.n))
        fh.write(np.asarray(dictionary.basis, dtype="<f8").tobytes(order="F"))


def load_dictionary(path) -> Dictionary:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != DICT_MAGIC:
        raise ValueError(f"{path}: not an FTDICT01 file")
    m, n = struct.unpack("<ii", data[8:16])
    if m <= 0 or n <= 0 or len(data) != 16 + 8 * m * n:
        raise ValueError(f"{path}: header m={m} n={n} does not match payload size")
    basis = np.frombuffer(data, dtype="<f8", offset=16).reshape((m, n), order="F")
    return Dictionary(basis.astype(np.float64))
