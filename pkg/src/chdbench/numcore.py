"""Small dense linear algebra for the Gaussian discriminants and SVM scaling.

Everything here is policy-free: a matrix that is not positive definite is
reported, never silently repaired.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotPositiveDefinite(np.linalg.LinAlgError):
    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix is not positive definite: pivot {pivot} = {value:.3g}")
        self.pivot = pivot
        self.value = value


@dataclass(frozen=True, eq=False)
class MeanCov:
    mean: np.ndarray
    cov: np.ndarray
    n: int


def mean_cov(rows: np.ndarray) -> MeanCov:
    """Sample mean and unbiased (n-1) covariance of the rows."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-d array")
    n = rows.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows for a covariance, got {n}")
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return MeanCov(mean, cov, n)


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises NotPositiveDefinite with the failing pivot."""
    a = np.asarray(a, dtype=float)
    p = a.shape[0]
    L = np.zeros_like(a)
    for j in range(p):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0.0:
            raise NotPositiveDefinite(j, float(d))
        L[j, j] = np.sqrt(d)
        if j + 1 < p:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _forward(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    Y = np.array(B, dtype=float, copy=True)
    for i in range(L.shape[0]):
        Y[i] = (Y[i] - L[i, :i] @ Y[:i]) / L[i, i]
    return Y


def _backward(L: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X = np.array(Y, dtype=float, copy=True)
    p = L.shape[0]
    for i in range(p - 1, -1, -1):
        X[i] = (X[i] - L[i + 1:, i] @ X[i + 1:]) / L[i, i]
    return X


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    L: np.ndarray

    @property
    def logdet(self) -> float:
        return float(2.0 * np.log(np.diag(self.L)).sum())

    def solve(self, B: np.ndarray) -> np.ndarray:
        return _backward(self.L, _forward(self.L, B))

    def whiten(self, B: np.ndarray) -> np.ndarray:
        """L^{-1} B, so that ||L^{-1} b||^2 = b' A^{-1} b."""
        return _forward(self.L, B)


def factor(a: np.ndarray) -> CholeskyFactor:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    return CholeskyFactor(cholesky(a))


def chol_logdet_solve(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """log|A| and A^{-1} B for symmetric positive definite A."""
    f = factor(a)
    return f.logdet, f.solve(np.asarray(b, dtype=float))


def pooled_cov(g1: MeanCov, g2: MeanCov) -> np.ndarray:
    dof = g1.n + g2.n - 2
    if dof <= 0:
        raise ValueError("pooled covariance needs n1 + n2 > 2")
    return ((g1.n - 1) * g1.cov + (g2.n - 1) * g2.cov) / dof


@dataclass(frozen=True, eq=False)
class Standardizer:
    center: np.ndarray
    scale: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.center) / self.scale

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.center


def fit_standardizer(train: np.ndarray) -> Standardizer:
    """Column means and population standard deviations of the training rows."""
    train = np.asarray(train, dtype=float)
    center = train.mean(axis=0)
    scale = train.std(axis=0)
    # a constant column can come out with a rounding-level sd instead of 0
    zero = np.flatnonzero(~(scale > 1e-12 * np.maximum(1.0, np.abs(center))))
    if zero.size:
        raise ValueError(f"zero-variance training column(s): {zero.tolist()}")
    return Standardizer(center, scale)


def standardize(train: np.ndarray, apply_to: np.ndarray) -> tuple[np.ndarray, Standardizer]:
    s = fit_standardizer(train)
    return s.transform(apply_to), s
