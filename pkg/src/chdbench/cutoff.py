"""Classifier cutoff sweeps and the equilibrium cutoff.

For each cutoff on a 1% grid the tested cases are labelled positive when the
model probability is at least the cutoff. The TP, FP, FN and TN count curves
cross pairwise; the equilibrium cutoff is the x-coordinate of the centroid of
the TN-TP, TP-FN, FN-FP and TN-FP crossing points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataset import Dataset
from .regressors import fit_forest, fit_logistic
from .splitter import Scenario, split_for_sim, sim_rng

log = logging.getLogger(__name__)

PAIRS = (("tn", "tp"), ("tp", "fn"), ("fn", "fp"), ("tn", "fp"))
MODEL_KINDS = ("logistic", "forest")


def default_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.round(np.arange(n + 1) * step, 12)


@dataclass(frozen=True, eq=False)
class CutoffCurves:
    grid: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    def curve(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def rows(self):
        for k, c in enumerate(self.grid):
            yield float(c), int(self.tp[k]), int(self.fp[k]), int(self.fn[k]), int(self.tn[k])


@dataclass(frozen=True)
class EquilibriumEstimate:
    pair_points: dict[str, tuple[float, float] | None]
    centroid: tuple[float, float]
    excluded_pairs: tuple[str, ...] = ()

    @property
    def equilibrium_cutoff(self) -> float:
        return self.centroid[0]


class NoCrossing(ValueError):
    pass


def curves_from_proba(prob: np.ndarray, actual: np.ndarray, grid: np.ndarray | None = None) -> CutoffCurves:
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    prob = np.asarray(prob, dtype=float)
    actual = np.asarray(actual).astype(bool)
    pred = prob[None, :] >= grid[:, None]
    tp = (pred & actual).sum(axis=1)
    fp = (pred & ~actual).sum(axis=1)
    fn = actual.sum() - tp
    tn = (~actual).sum() - fp
    return CutoffCurves(grid, tp, fp, fn, tn)


def sweep(prob_model, X_test: np.ndarray, y_test: np.ndarray, grid: np.ndarray | None = None) -> CutoffCurves:
    """Count curves of a probability model over the cutoff grid."""
    return curves_from_proba(prob_model.predict_proba(X_test), y_test, grid)


def _crossings(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> list[tuple[float, float]]:
    d = a.astype(float) - b.astype(float)
    out = []
    for k in range(len(x)):
        if d[k] == 0:
            out.append((float(x[k]), float(a[k])))
        if k + 1 < len(x) and d[k] * d[k + 1] < 0:
            t = d[k] / (d[k] - d[k + 1])
            xc = x[k] + t * (x[k + 1] - x[k])
            yc = a[k] + t * (a[k + 1] - a[k])
            out.append((float(xc), float(yc)))
    return out


def _median_point(points: list[tuple[float, float]], x, a, b) -> tuple[float, float]:
    if len(points) == 1:
        return points[0]
    xs = sorted(p[0] for p in points)
    xm = float(np.median(xs))
    # height at the median abscissa: midpoint of the two interpolated curves
    ym = 0.5 * (np.interp(xm, x, a) + np.interp(xm, x, b))
    return xm, float(ym)


def intersections(curves: CutoffCurves) -> EquilibriumEstimate:
    points: dict[str, tuple[float, float] | None] = {}
    excluded = []
    for first, second in PAIRS:
        name = f"{first.upper()}-{second.upper()}"
        a, b = curves.curve(first), curves.curve(second)
        found = _crossings(curves.grid, a, b)
        if not found:
            points[name] = None
            excluded.append(name)
            continue
        points[name] = _median_point(found, curves.grid, a, b)
    kept = [p for p in points.values() if p is not None]
    if not kept:
        raise NoCrossing("no curve pair changes sign on the grid")
    centroid = (float(np.mean([p[0] for p in kept])), float(np.mean([p[1] for p in kept])))
    return EquilibriumEstimate(points, centroid, tuple(excluded))


def fit_probability_model(kind: str, X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
                          n_trees: int = 100):
    if kind == "logistic":
        return fit_logistic(X, y)
    if kind == "forest":
        return fit_forest(X, y, n_trees=n_trees, rng=rng)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


@dataclass
class SimRecord:
    sim: int
    curves: CutoffCurves
    estimate: EquilibriumEstimate


@dataclass
class EquilibriumSampling:
    model_kind: str
    scenario: Scenario
    tau: float
    pair_points: dict[str, tuple[float, float] | None]
    centroid: tuple[float, float]
    records: list[SimRecord] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def equilibrium_cutoff(self) -> float:
        return self.centroid[0]


def equilibrium_sampling(d: Dataset, scenario: Scenario, tau: float, model_kind: str, n_sims: int,
                         master_seed: int, grid: np.ndarray | None = None, n_trees: int = 100,
                         progress: Callable[[int], None] | None = None) -> EquilibriumSampling:
    """Repeat split/fit/sweep/intersect and average the crossing points.

    Each pair's mean point is taken over the simulations where that pair
    crossed; the centroid is the mean of the (up to four) mean pair points.
    """
    if n_sims < 1:
        raise ValueError("n_sims must be >= 1")
    records: list[SimRecord] = []
    failures: list[tuple[int, str]] = []
    for k in range(n_sims):
        try:
            split = split_for_sim(d, scenario, tau, master_seed, k)
            train = split.train
            model = fit_probability_model(model_kind, d.X[train], d.y[train],
                                          sim_rng(master_seed, k, 1), n_trees=n_trees)
            curves = sweep(model, d.X[split.test], d.y[split.test], grid)
            records.append(SimRecord(k, curves, intersections(curves)))
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.warning("simulation %d failed: %s", k, exc)
            failures.append((k, str(exc)))
        if progress:
            progress(k)
    if not records:
        raise NoCrossing(f"all {n_sims} simulations failed")
    pair_points: dict[str, tuple[float, float] | None] = {}
    for first, second in PAIRS:
        name = f"{first.upper()}-{second.upper()}"
        pts = [r.estimate.pair_points[name] for r in records if r.estimate.pair_points[name] is not None]
        pair_points[name] = (
            (float(np.mean([p[0] for p in pts])), float(np.mean([p[1] for p in pts]))) if pts else None
        )
    kept = [p for p in pair_points.values() if p is not None]
    centroid = (float(np.mean([p[0] for p in kept])), float(np.mean([p[1] for p in kept])))
    return EquilibriumSampling(model_kind, scenario, tau, pair_points, centroid, records, failures)
