"""L1-regularized least squares: min_a 0.5 ||x - D a||^2 + lam ||a||_1.

Each signal is solved by the LARS-Lasso homotopy on the Gram matrix, with
cyclic coordinate-descent passes as a polish if rounding leaves a residual. The stopping rule is the KKT residual
itself, so every returned solution is certified optimal to ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000


class LassoConvergenceError(RuntimeError):
    def __init__(self, column: int, residual: float, max_iter: int):
        super().__init__(
            f"lasso did not reach KKT tolerance in {max_iter} passes "
            f"(column {column}, KKT residual {residual:.3e})"
        )
        self.column = column
        self.residual = residual


@dataclass
class LassoProblem:
    dict: np.ndarray
    signal: np.ndarray
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        norms = np.linalg.norm(self.dict, axis=0)
        if np.any(norms > 1 + 1e-9):
            raise ValueError(f"dictionary column norm {norms.max():.6g} exceeds 1")


def default_lambda(m: int) -> float:
    """Dimension-scaled heuristic 1.2 / sqrt(m)."""
    return 1.2 / math.sqrt(m)


def objective(D: np.ndarray, x: np.ndarray, alpha: np.ndarray, lam: float) -> float:
    r = x - D @ alpha
    return 0.5 * float(r @ r) + lam * float(np.abs(alpha).sum())


def kkt_residual(D: np.ndarray, x: np.ndarray, alpha: np.ndarray, lam: float) -> float:
    """Largest violation of the Lasso optimality conditions."""
    corr = D.T @ (x - D @ alpha)
    active = alpha != 0
    worst = 0.0
    if np.any(active):
        worst = float(np.max(np.abs(corr[active] - lam * np.sign(alpha[active]))))
    if np.any(~active):
        worst = max(worst, float(np.max(np.abs(corr[~active]) - lam)))
    return max(worst, 0.0)


@njit(cache=True)
def _kkt_from_gram(G, c, alpha, lam):
    n = alpha.shape[0]
    worst = 0.0
    for j in range(n):
        g = c[j]
        for k in range(n):
            g -= G[j, k] * alpha[k]
        if alpha[j] > 0:
            v = abs(g - lam)
        elif alpha[j] < 0:
            v = abs(g + lam)
        else:
            v = abs(g) - lam
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _gradient(G, c, alpha, grad):
    n = alpha.shape[0]
    for j in range(n):
        g = c[j]
        for k in range(n):
            g -= G[j, k] * alpha[k]
        grad[j] = g


@njit(cache=True)
def _cd_passes(G, c, alpha, grad, lam, passes):
    n = alpha.shape[0]
    for _ in range(passes):
        for j in range(n):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            old = alpha[j]
            z = grad[j] + gjj * old
            if z > lam:
                new = (z - lam) / gjj
            elif z < -lam:
                new = (z + lam) / gjj
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                alpha[j] = new
                for k in range(n):
                    grad[k] -= G[k, j] * delta


@njit(cache=True)
def _chol_append(L, k, G, idx):
    """Extend the Cholesky factor of G[idx[:k], idx[:k]] by row k; False if singular."""
    j = idx[k]
    for p in range(k):
        v = G[idx[p], j]
        for q in range(p):
            v -= L[p, q] * L[k, q]
        L[k, p] = v / L[p, p]
    diag = G[j, j]
    for q in range(k):
        diag -= L[k, q] * L[k, q]
    if diag <= 1e-12 * G[j, j]:
        return False
    L[k, k] = np.sqrt(diag)
    return True


@njit(cache=True)
def _chol_solve(L, k, rhs, out):
    for p in range(k):
        v = rhs[p]
        for q in range(p):
            v -= L[p, q] * out[q]
        out[p] = v / L[p, p]
    for p in range(k - 1, -1, -1):
        v = out[p]
        for q in range(p + 1, k):
            v -= L[q, p] * out[q]
        out[p] = v / L[p, p]


@njit(cache=True)
def _lars_path(G, c, lam, alpha, max_steps):
    """LARS-Lasso homotopy from lam_max down to lam; alpha must start at zero.

    Returns the number of steps taken, or -1 if the path could not be followed
    (step budget exhausted or a singular active set); alpha then holds the
    last point reached.
    """
    n = c.shape[0]
    corr = c.copy()
    active = np.zeros(n, dtype=np.bool_)
    idx = np.empty(n, dtype=np.int64)
    L = np.zeros((n, n))
    sgn = np.empty(n)
    d = np.empty(n)
    a = np.empty(n)
    best = 0
    level = 0.0
    for j in range(n):
        if G[j, j] > 0.0 and abs(corr[j]) > level:
            level = abs(corr[j])
            best = j
    if level <= lam:
        return 0
    active[best] = True
    idx[0] = best
    if not _chol_append(L, 0, G, idx):
        return -1
    k = 1
    for step in range(max_steps):
        for p in range(k):
            sgn[p] = 1.0 if corr[idx[p]] > 0 else -1.0
        _chol_solve(L, k, sgn, d)
        for j in range(n):
            v = 0.0
            for q in range(k):
                v += G[j, idx[q]] * d[q]
            a[j] = v
        gamma = level - lam
        event = -1
        drop = False
        for j in range(n):
            if active[j] or G[j, j] <= 0.0:
                continue
            denom = 1.0 - a[j]
            if denom > 1e-12:
                g = (level - corr[j]) / denom
                if 0.0 < g < gamma:
                    gamma = g
                    event = j
                    drop = False
            denom = 1.0 + a[j]
            if denom > 1e-12:
                g = (level + corr[j]) / denom
                if 0.0 < g < gamma:
                    gamma = g
                    event = j
                    drop = False
        for p in range(k):
            j = idx[p]
            if d[p] * alpha[j] < 0.0:
                g = -alpha[j] / d[p]
                if 0.0 < g < gamma:
                    gamma = g
                    event = p
                    drop = True
        for p in range(k):
            alpha[idx[p]] += gamma * d[p]
        for j in range(n):
            corr[j] -= gamma * a[j]
        level -= gamma
        if event < 0:
            return step + 1
        if drop:
            j = idx[event]
            alpha[j] = 0.0
            active[j] = False
            for p in range(event, k - 1):
                idx[p] = idx[p + 1]
            k -= 1
            if k == 0:
                return step + 1
            # refactor from scratch; drops are rare
            for p in range(k):
                if not _chol_append(L, p, G, idx):
                    return -1
        else:
            active[event] = True
            idx[k] = event
            if not _chol_append(L, k, G, idx):
                return -1
            k += 1
    return -1


@njit(cache=True)
def _solve_columns(G, C, lam, tol, max_iter, out, residuals):
    """LARS-Lasso per column of C = D^T X, then coordinate-descent polishing
    until the KKT residual is within tol. Returns the first failed column or -1."""
    n, eta = C.shape
    failed = -1
    grad = np.empty(n)
    for col in range(eta):
        alpha = out[:, col]
        c = C[:, col]
        for j in range(n):
            alpha[j] = 0.0
        _lars_path(G, c, lam, alpha, 8 * n + 16)
        res = _kkt_from_gram(G, c, alpha, lam)
        it = 0
        while res > tol and it < max_iter:
            it += 1
            _gradient(G, c, alpha, grad)
            _cd_passes(G, c, alpha, grad, lam, 1)
            res = _kkt_from_gram(G, c, alpha, lam)
        residuals[col] = res
        if res > tol and failed < 0:
            failed = col
    return failed


def lasso_solve_batch(
    D: np.ndarray,
    X: np.ndarray,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Solve the Lasso independently for every column of X (m x eta); returns n x eta."""
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    D = np.ascontiguousarray(D, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if D.shape[0] != X.shape[0]:
        raise ValueError(f"dictionary has {D.shape[0]} rows but signals have {X.shape[0]}")
    G = D.T @ D
    C = np.ascontiguousarray(D.T @ X)
    out = np.zeros_like(C)
    residuals = np.zeros(C.shape[1])
    failed = _solve_columns(G, C, float(lam), float(tol), int(max_iter), out, residuals)
    if failed >= 0:
        raise LassoConvergenceError(int(failed), float(residuals[failed]), max_iter)
    return out


def lasso_solve(problem: LassoProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    return lasso_solve_batch(problem.dict, problem.signal, problem.lam, tol, max_iter)[:, 0]
