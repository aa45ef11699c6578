"""Probability models turned into classifiers by a cutoff.

Logistic regression is fit by IRLS and carries Wald standard errors.
The random forest is bootstrap-aggregated CART with Gini splits; its
probability is the fraction of trees voting positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Protocol

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from .splitter import ScenarioSplit, training_prevalence

MAX_IRLS_ITER = 50
DEVIANCE_TOL = 1e-8
COEF_RTOL = 1e-6


class ProbabilityModel(Protocol):
    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _deviance(y: np.ndarray, eta: np.ndarray) -> float:
    # -2 log-likelihood, computed stably from the linear predictor
    return float(2.0 * np.sum(np.logaddexp(0.0, eta) - y * eta))


@dataclass(frozen=True, eq=False)
class LogisticModel:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    converged: bool
    iterations: int
    deviance: float
    separation: bool = False

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, len(self.coefficients) - 1)
        return self.coefficients[0] + X @ self.coefficients[1:]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.linear_predictor(X))


def fit_logistic(X: np.ndarray, y: np.ndarray) -> LogisticModel:
    """Maximum likelihood logistic regression with an intercept, via IRLS.

    Stops when the deviance changes by less than 1e-8 and coefficients have
    settled, or after 50 iterations. Separation does not raise: the model is
    returned unconverged with the last finite iterate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, p = X.shape
    if len(y) != n:
        raise ValueError("X and y lengths differ")
    if n <= p + 1:
        raise ValueError(f"need more than {p + 1} rows, got {n}")
    A = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(A) < p + 1:
        raise np.linalg.LinAlgError("design matrix is rank deficient")

    beta = np.zeros(p + 1)
    eta = A @ beta
    dev = _deviance(y, eta)
    converged = False
    separation = False
    it = 0
    for it in range(1, MAX_IRLS_ITER + 1):
        mu = _sigmoid(eta)
        w = mu * (1.0 - mu)
        if not np.all(w > 1e-300):
            separation = True
        info = A.T @ (A * w[:, None])
        try:
            step = np.linalg.solve(info, A.T @ (y - mu))
        except np.linalg.LinAlgError:
            separation = True
            break
        new_beta = beta + step
        new_eta = A @ new_beta
        new_dev = _deviance(y, new_eta)
        if not (np.all(np.isfinite(new_beta)) and math.isfinite(new_dev)):
            separation = True
            break
        small_dev = abs(dev - new_dev) < DEVIANCE_TOL
        small_coef = np.max(np.abs(step) / (1.0 + np.abs(new_beta))) < COEF_RTOL
        beta, eta, dev = new_beta, new_eta, new_dev
        if small_dev and small_coef:
            converged = True
            break
    if dev < 1e-6:
        # perfect fit: likelihood has no finite maximiser
        separation = True
    if separation:
        converged = False

    mu = _sigmoid(eta)
    w = mu * (1.0 - mu)
    info = A.T @ (A * w[:, None])
    try:
        cov = np.linalg.inv(info)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.full(p + 1, np.inf)
    if not converged and not separation:
        # iteration cap hit while coefficients still drifting: quasi-separation
        separation = bool(np.max(np.abs(beta)) > 10.0 or np.any(w < 1e-10))
    return LogisticModel(beta, se, converged, it, dev, separation)


def wald_significance(model: LogisticModel, alpha: float) -> list[bool | None]:
    """Two-sided Wald test per coefficient (intercept first).

    Returns ``None`` for every coefficient when the fit did not converge.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not model.converged:
        return [None] * len(model.coefficients)
    crit = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    flags = []
    for b, se in zip(model.coefficients, model.standard_errors):
        flags.append(bool(se > 0 and math.isfinite(se) and abs(b) / se > crit))
    return flags


def predict_proba_logistic(model: LogisticModel, x: np.ndarray) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    out = model.predict_proba(x)
    return float(out[0]) if x.ndim == 1 else out


DEFAULT_TREES = 100
MIN_NODE = 5


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list
    n_trees: int
    mtry: int
    seed: tuple[int, ...] = ()
    degenerate_class: int | None = None
    _positive_col: list = field(default_factory=list, repr=False)

    def votes(self, X: np.ndarray) -> np.ndarray:
        """(n_trees, n) matrix of 0/1 tree votes."""
        X = np.asarray(X, dtype=float)
        X = X.reshape(-1, X.shape[-1]) if X.ndim > 1 else X.reshape(1, -1)
        if self.degenerate_class is not None:
            return np.full((self.n_trees, len(X)), self.degenerate_class, dtype=np.int8)
        out = np.empty((self.n_trees, len(X)), dtype=np.int8)
        for t, (tree, col) in enumerate(zip(self.trees, self._positive_col)):
            if col is None:
                out[t] = int(tree.classes_[0])
            else:
                # a tree votes positive when the leaf majority is positive
                out[t] = tree.predict_proba(X)[:, col] > 0.5
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.votes(X).mean(axis=0)


def fit_forest(X: np.ndarray, y: np.ndarray, n_trees: int = DEFAULT_TREES, mtry: int | None = None,
               rng: np.random.Generator | None = None, seed: tuple[int, ...] = ()) -> ForestModel:
    """Bagged CART: bootstrap of size n per tree, Gini splits over ``mtry``
    random features per node, nodes with fewer than 5 rows are not split."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int).reshape(-1)
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least 2 training rows")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    mtry = max(1, int(math.floor(math.sqrt(p)))) if mtry is None else int(mtry)
    rng = rng if rng is not None else np.random.default_rng()
    classes = np.unique(y)
    if len(classes) == 1:
        return ForestModel([], n_trees, mtry, seed, degenerate_class=int(classes[0]))

    trees, cols = [], []
    for _ in range(n_trees):
        rows = rng.integers(0, n, size=n)
        tree = DecisionTreeClassifier(
            criterion="gini",
            max_features=mtry,
            min_samples_split=MIN_NODE,
            random_state=int(rng.integers(0, 2**31 - 1)),
        )
        tree.fit(X[rows], y[rows])
        trees.append(tree)
        hit = np.flatnonzero(tree.classes_ == 1)
        cols.append(int(hit[0]) if hit.size and len(tree.classes_) > 1 else None)
    return ForestModel(trees, n_trees, mtry, seed, None, cols)


def predict_proba_forest(model: ForestModel, x: np.ndarray) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    out = model.predict_proba(x)
    return float(out[0]) if x.ndim == 1 else out


@dataclass(frozen=True, eq=False)
class CutoffClassifier:
    base: ProbabilityModel
    cutoff: float

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.base.predict_proba(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.base.predict_proba(X) >= self.cutoff).astype(np.int8)


def as_classifier(base: ProbabilityModel, split: ScenarioSplit) -> CutoffClassifier:
    """Threshold at the training prevalence (the equilibrium cutoff)."""
    return CutoffClassifier(base, training_prevalence(split))
