"""Gaussian log-likelihood discriminants and Double Discriminant Scoring.

Both scores are log-likelihood differences (group 1 minus group 2) under
multivariate normal models, with no class priors:

* LD uses the pooled covariance for both groups;
* QD uses each group's own covariance, including the log-determinant terms.

DDS1 flags a case positive when LD or QD does, DDS2 when both do.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numcore import CholeskyFactor, NotPositiveDefinite, factor, mean_cov, pooled_cov

RIDGE_START = 1e-8
RIDGE_MAX = 1e-4


class DiscriminantError(ValueError):
    pass


def _regularized_factor(cov: np.ndarray, name: str, record: dict[str, float]) -> CholeskyFactor:
    try:
        return factor(cov)
    except NotPositiveDefinite:
        pass
    p = cov.shape[0]
    base = np.trace(cov) / p
    if not base > 0:
        raise DiscriminantError(f"{name}: covariance has zero trace")
    eps = RIDGE_START
    while eps <= RIDGE_MAX * (1 + 1e-9):
        try:
            f = factor(cov + eps * base * np.eye(p))
        except NotPositiveDefinite:
            eps *= 10
            continue
        record[name] = eps
        return f
    raise DiscriminantError(f"{name}: covariance singular even with ridge {RIDGE_MAX:g}")


@dataclass(frozen=True, eq=False)
class GaussianGroupModel:
    mu1: np.ndarray
    mu2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma_pooled: np.ndarray
    f1: CholeskyFactor
    f2: CholeskyFactor
    f_pooled: CholeskyFactor
    regularized: dict[str, float] = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.mu1)

    def scores(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """LD and QD scores for each row of ``rows`` (n x p)."""
        X = np.asarray(rows, dtype=float).reshape(-1, self.p).T
        d1 = X - self.mu1[:, None]
        d2 = X - self.mu2[:, None]
        w1 = self.f_pooled.whiten(d1)
        w2 = self.f_pooled.whiten(d2)
        ld = 0.5 * ((w2 * w2).sum(axis=0) - (w1 * w1).sum(axis=0))
        q1 = self.f1.whiten(d1)
        q2 = self.f2.whiten(d2)
        qd = 0.5 * (
            self.f2.logdet + (q2 * q2).sum(axis=0) - self.f1.logdet - (q1 * q1).sum(axis=0)
        )
        return ld, qd


@dataclass(frozen=True)
class DiscriminantDecision:
    ld_score: float
    qd_score: float
    ld_class: int
    qd_class: int
    dds1_class: int
    dds2_class: int


def fit_gaussian(train_g1: np.ndarray, train_g2: np.ndarray) -> GaussianGroupModel:
    train_g1 = np.asarray(train_g1, dtype=float)
    train_g2 = np.asarray(train_g2, dtype=float)
    if train_g1.ndim != 2 or train_g2.ndim != 2 or train_g1.shape[1] != train_g2.shape[1]:
        raise DiscriminantError("group matrices must be 2-d with the same number of columns")
    p = train_g1.shape[1]
    for name, g in (("group 1", train_g1), ("group 2", train_g2)):
        if len(g) < p + 1:
            raise DiscriminantError(f"{name} has {len(g)} rows; need at least {p + 1}")
    m1 = mean_cov(train_g1)
    m2 = mean_cov(train_g2)
    pooled = pooled_cov(m1, m2)
    record: dict[str, float] = {}
    f1 = _regularized_factor(m1.cov, "sigma1", record)
    f2 = _regularized_factor(m2.cov, "sigma2", record)
    fp = _regularized_factor(pooled, "sigma_pooled", record)
    return GaussianGroupModel(m1.mean, m2.mean, m1.cov, m2.cov, pooled, f1, f2, fp, record)


def decide(model: GaussianGroupModel, x: np.ndarray) -> DiscriminantDecision:
    ld, qd = model.scores(np.asarray(x, dtype=float).reshape(1, -1))
    ld_c = int(ld[0] > 0)
    qd_c = int(qd[0] > 0)
    return DiscriminantDecision(float(ld[0]), float(qd[0]), ld_c, qd_c, ld_c | qd_c, ld_c & qd_c)


def classify_batch(model: GaussianGroupModel, rows: np.ndarray) -> dict[str, np.ndarray]:
    """Labels for LD, QD, DDS1 and DDS2 on every row. Score ties go negative."""
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        empty = np.zeros(0, dtype=np.int8)
        return {"LD": empty, "QD": empty.copy(), "DDS1": empty.copy(), "DDS2": empty.copy()}
    ld, qd = model.scores(rows)
    ld_c = ld > 0
    qd_c = qd > 0
    return {
        "LD": ld_c.astype(np.int8),
        "QD": qd_c.astype(np.int8),
        "DDS1": (ld_c | qd_c).astype(np.int8),
        "DDS2": (ld_c & qd_c).astype(np.int8),
    }
