"""Gradient-boosted trees and an RBF support vector machine.

These are the two comparison baselines whose behaviour collapses when the
training data keep the population's 15% prevalence. Neither uses a cutoff
calibrated to the training prevalence: boosting predicts positive when
P(positive) > P(negative), the SVM by the sign of its margin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .numcore import Standardizer, fit_standardizer

# ---------------------------------------------------------------------------
# gradient boosting, logistic loss, second-order leaf weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoostTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            idx = np.flatnonzero(inner)
            go_left = X[idx, f[idx]] < self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])


@dataclass(frozen=True, eq=False)
class BoostModel:
    trees: list[BoostTree]
    learning_rate: float
    n_rounds: int
    base_score: float
    reg_lambda: float = 1.0
    train_loss: list[float] = field(default_factory=list)

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(len(X), self.base_score)
        for t in self.trees:
            out += self.learning_rate * t.predict(X)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.margin(X)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        p = self.predict_proba(X)
        return (p > 1.0 - p).astype(np.int8)


def _logloss(y: np.ndarray, margin: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def _grow_tree(X, order, g, h, max_depth, reg_lambda, min_child_weight) -> BoostTree:
    n, p = X.shape
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def build(mask: np.ndarray, depth: int) -> int:
        node = new_node()
        G = g[mask].sum()
        H = h[mask].sum()
        value[node] = -G / (H + reg_lambda)
        if depth >= max_depth:
            return node
        parent = G * G / (H + reg_lambda)
        best = (0.0, -1, 0.0)
        for f in range(p):
            idx = order[f][mask[order[f]]]
            if len(idx) < 2:
                continue
            xs = X[idx, f]
            GL = np.cumsum(g[idx])[:-1]
            HL = np.cumsum(h[idx])[:-1]
            GR = G - GL
            HR = H - HL
            ok = (xs[1:] > xs[:-1]) & (HL >= min_child_weight) & (HR >= min_child_weight)
            if not ok.any():
                continue
            gain = GL**2 / (HL + reg_lambda) + GR**2 / (HR + reg_lambda) - parent
            gain = np.where(ok, gain, -np.inf)
            i = int(np.argmax(gain))
            if gain[i] > best[0] + 1e-12:
                best = (float(gain[i]), f, 0.5 * (xs[i] + xs[i + 1]))
        _, f, thr = best
        if f < 0:
            return node
        goes_left = X[:, f] < thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(mask & goes_left, depth + 1)
        right[node] = build(mask & ~goes_left, depth + 1)
        return node

    build(np.ones(n, dtype=bool), 0)
    return BoostTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
    )


def fit_boost(X: np.ndarray, y: np.ndarray, n_rounds: int = 100, learning_rate: float = 0.3,
              max_depth: int = 3, rng: np.random.Generator | None = None, reg_lambda: float = 1.0,
              min_child_weight: float = 1.0) -> BoostModel:
    """Additive log-odds trees fit to the logistic-loss gradient and Hessian.

    Exact greedy splits, no row or column subsampling, so ``rng`` is accepted
    for interface symmetry but the fit is deterministic regardless.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    if len(np.unique(y)) < 2:
        raise ValueError("boosting needs both classes in the training data")
    prev = y.mean()
    base = float(np.log(prev / (1.0 - prev)))
    order = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]
    margin = np.full(len(y), base)
    trees, losses = [], [_logloss(y, margin)]
    for _ in range(n_rounds):
        prob = 1.0 / (1.0 + np.exp(-margin))
        g = prob - y
        h = prob * (1.0 - prob)
        tree = _grow_tree(X, order, g, h, max_depth, reg_lambda, min_child_weight)
        trees.append(tree)
        margin = margin + learning_rate * tree.predict(X)
        losses.append(_logloss(y, margin))
    return BoostModel(trees, learning_rate, n_rounds, base, reg_lambda, losses)


def predict_boost(model: BoostModel, x: np.ndarray) -> tuple[float, float]:
    p = float(model.predict_proba(np.asarray(x, dtype=float).reshape(1, -1))[0])
    return p, 1.0 - p


# ---------------------------------------------------------------------------
# soft-margin RBF SVM by SMO
# ---------------------------------------------------------------------------

KKT_TOL = 1e-3
TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@numba.njit(cache=True)
def _smo(K, y, C, eps, max_iter):
    # Working-set selection with second-order information (Fan, Chen & Lin 2005).
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while it < max_iter:
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v > gmax:
                    gmax = v
                    i = t
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * G[t]
                if v < gmin:
                    gmin = v
                if i >= 0:
                    b = gmax - v
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 0:
                            a = TAU
                        obj = -(b * b) / a
                        if obj <= best:
                            best = obj
                            j = t
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < eps:
            break
        it += 1
        yi = y[i]
        yj = y[j]
        Qij = yi * yj * K[i, j]
        old_i = alpha[i]
        old_j = alpha[j]
        if yi != yj:
            quad = K[i, i] + K[j, j] + 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            G[t] += y[t] * (yi * K[t, i] * di + yj * K[t, j] * dj)

    ub = np.inf
    lb = -np.inf
    total = 0.0
    nfree = 0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            total += yg
            nfree += 1
    rho = total / nfree if nfree > 0 else 0.5 * (ub + lb)
    return alpha, rho, it, gap


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray  # standardized coordinates
    dual_coef: np.ndarray  # alpha_i * y_i
    alpha: np.ndarray  # all training alphas, for feasibility checks
    y_signed: np.ndarray
    bias: float
    gamma: float
    c_penalty: float
    transform: Standardizer
    converged: bool
    iterations: int
    kkt_gap: float

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Z = self.transform.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        if len(self.support_vectors) == 0:
            return np.full(len(Z), self.bias)
        return rbf_kernel(Z, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int8)


def fit_svm(X: np.ndarray, y: np.ndarray, C: float = 1.0, gamma: float | str = "scale",
            rng: np.random.Generator | None = None, max_iter: int = 10_000_000) -> SvmModel:
    """Soft-margin RBF SVM on training-standardized features.

    ``gamma="scale"`` means 1 / (p * mean feature variance) of the
    standardized data. SMO stops when the maximal KKT violation falls below
    1e-3; hitting ``max_iter`` returns the last iterate with converged=False.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int).reshape(-1)
    if len(np.unique(y)) < 2:
        raise ValueError("SVM needs both classes in the training data")
    transform = fit_standardizer(X)
    Z = transform.transform(X)
    if gamma == "scale":
        gamma = 1.0 / (Z.shape[1] * Z.var())
    ys = np.where(y == 1, 1.0, -1.0)
    K = rbf_kernel(Z, Z, float(gamma))
    alpha, rho, it, gap = _smo(K, ys, float(C), KKT_TOL, int(max_iter))
    sv = alpha > 0
    return SvmModel(
        support_vectors=Z[sv],
        dual_coef=(alpha * ys)[sv],
        alpha=alpha,
        y_signed=ys,
        bias=-float(rho),
        gamma=float(gamma),
        c_penalty=float(C),
        transform=transform,
        converged=bool(gap < KKT_TOL),
        iterations=int(it),
        kkt_gap=float(gap),
    )


def predict_svm(model: SvmModel, x: np.ndarray) -> int:
    return int(model.predict(np.asarray(x, dtype=float).reshape(1, -1))[0])
