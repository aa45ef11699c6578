"""Paired-design Monte Carlo runs.

Simulation ``k`` draws one split from (master seed, k). Every algorithm is
fit and scored on that same split, so differences between algorithms (or
between variable subsets) are paired. Per-algorithm randomness comes from a
separate stream keyed by the algorithm, so adding or removing an algorithm
never perturbs the splits or the other algorithms.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .baselines import fit_boost, fit_svm
from .dataset import Dataset, project, select
from .discriminant import classify_batch, fit_gaussian
from .metrics import PerformanceMatrix, aggregate, evaluate
from .regressors import as_classifier, fit_forest, fit_logistic, wald_significance
from .splitter import SCENARIOS, Scenario, ScenarioSplit, planned_sizes, sim_rng, split_for_sim

log = logging.getLogger(__name__)

ALGORITHMS = ("XGB", "SVM", "RF", "Logit", "LD", "QD", "DDS1", "DDS2")
GAUSSIAN_FAMILY = ("LD", "QD", "DDS1", "DDS2")
FAILURE_CEILING = 0.10

# Classifier callables receive (train_X, train_y, test_X, split, rng) and return 0/1 labels.
Classifier = Callable[[np.ndarray, np.ndarray, np.ndarray, ScenarioSplit, np.random.Generator], np.ndarray]


class HarnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: Scenario
    tau: float = 0.8
    algorithms: tuple[str, ...] = ALGORITHMS
    n_sims: int = 100
    master_seed: int = 0
    sex: str = "all"
    vars: tuple[int, ...] | None = None
    retain_raw: bool = False
    forest_trees: int = 100

    def __post_init__(self):
        if self.n_sims < 1:
            raise ValueError("n_sims must be >= 1")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        if isinstance(self.scenario, str):
            object.__setattr__(self, "scenario", Scenario.parse(self.scenario))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.vars is not None:
            object.__setattr__(self, "vars", tuple(sorted(set(self.vars))))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenario"] = self.scenario.name
        return d


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    means: dict[str, PerformanceMatrix]
    raw: dict[str, list[PerformanceMatrix]] = field(default_factory=dict)
    failures: dict[str, list[tuple[int, str]]] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    def metric(self, algorithm: str, name: str) -> float | None:
        return self.means[algorithm].metric(name)


def prepare(d: Dataset, sex: str = "all", vars: Sequence[int] | None = None) -> Dataset:
    d = select(d, sex)
    return project(d, vars) if vars else d


# --- per-algorithm fitting -------------------------------------------------

def _rng_for(master_seed: int, sim: int, name: str) -> np.random.Generator:
    tag = ALGORITHMS.index(name) + 1 if name in ALGORITHMS else 100 + sum(map(ord, name))
    return sim_rng(master_seed, sim, tag)


def predict_labels(name: str, Xtr: np.ndarray, ytr: np.ndarray, Xte: np.ndarray, split: ScenarioSplit,
                   rng: np.random.Generator, forest_trees: int = 100) -> np.ndarray:
    if name == "XGB":
        return fit_boost(Xtr, ytr, rng=rng).predict(Xte)
    if name == "SVM":
        return fit_svm(Xtr, ytr, rng=rng).predict(Xte)
    if name == "RF":
        return as_classifier(fit_forest(Xtr, ytr, n_trees=forest_trees, rng=rng), split).predict(Xte)
    if name == "Logit":
        return as_classifier(fit_logistic(Xtr, ytr), split).predict(Xte)
    if name in GAUSSIAN_FAMILY:
        g1 = Xtr[ytr == 1]
        g2 = Xtr[ytr == 0]
        return classify_batch(fit_gaussian(g1, g2), Xte)[name]
    raise ValueError(f"unknown algorithm {name!r}")


def run_sim(d: Dataset, spec: ExperimentSpec, sim: int,
            custom: Mapping[str, Classifier] | None = None) -> tuple[int, dict[str, PerformanceMatrix | str]]:
    """One paired simulation: a matrix per algorithm, or an error message."""
    split = split_for_sim(d, spec.scenario, spec.tau, spec.master_seed, sim)
    train = split.train
    Xtr, ytr = d.X[train], d.y[train]
    Xte, yte = d.X[split.test], d.y[split.test]
    out: dict[str, PerformanceMatrix | str] = {}
    gaussian = None
    for name in spec.algorithms:
        rng = _rng_for(spec.master_seed, sim, name)
        try:
            if custom and name in custom:
                labels = np.asarray(custom[name](Xtr, ytr, Xte, split, rng))
            elif name in GAUSSIAN_FAMILY:
                if gaussian is None:
                    gaussian = classify_batch(fit_gaussian(Xtr[ytr == 1], Xtr[ytr == 0]), Xte)
                labels = gaussian[name]
            else:
                labels = predict_labels(name, Xtr, ytr, Xte, split, rng, spec.forest_trees)
            out[name] = evaluate(yte, labels)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out[name] = f"{type(exc).__name__}: {exc}"
    return sim, out


def _run_chunk(args):
    d, spec, sims, custom = args
    return [run_sim(d, spec, k, custom) for k in sims]


def _chunks(n: int, parts: int) -> list[list[int]]:
    parts = max(1, min(parts, n))
    return [list(range(i, n, parts)) for i in range(parts)]


def default_workers() -> int:
    return os.cpu_count() or 1


def _execute(d: Dataset, spec: ExperimentSpec, custom, workers: int):
    if workers <= 1 or spec.n_sims == 1:
        return [run_sim(d, spec, k, custom) for k in range(spec.n_sims)]
    jobs = [(d, spec, sims, custom) for sims in _chunks(spec.n_sims, workers)]
    results = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk in pool.map(_run_chunk, jobs):
            results.extend(chunk)
    return sorted(results, key=lambda r: r[0])


def split_notes(n_g1: int, n_g2: int, scenario: Scenario, tau: float) -> dict:
    sizes = planned_sizes(n_g1, n_g2, scenario, tau)
    notes = []
    if scenario.training.value == "prop" and (n_g1, n_g2, round(tau, 9)) == (622, 3520, 0.8):
        notes.append(
            "n2 = round(0.8 * 3520) = 2816 by the scenario formula; the published size table prints 2819."
        )
    if scenario.name == "eq-prop" and (n_g1, n_g2, round(tau, 9)) == (337, 1456, 0.8):
        notes.append(
            "male equal training uses n2 = n1 = 270; the published per-sex size table prints 1165 for this row."
        )
    return {"sizes": sizes, "notes": notes}


def run(spec: ExperimentSpec, data: Dataset, custom: Mapping[str, Classifier] | None = None,
        workers: int = 1) -> ExperimentResult:
    """Run ``spec.n_sims`` paired simulations and average per algorithm.

    An algorithm failing in a simulation is excluded from that simulation's
    average and logged; more than 10% failures for any algorithm aborts.
    """
    d = prepare(data, spec.sex, spec.vars)
    # validate feasibility once, before spending any work
    planned = split_notes(d.n1, d.n2, spec.scenario, spec.tau)
    split_for_sim(d, spec.scenario, spec.tau, spec.master_seed, 0)

    results = _execute(d, spec, custom, workers)
    raw: dict[str, list[PerformanceMatrix]] = {a: [] for a in spec.algorithms}
    failures: dict[str, list[tuple[int, str]]] = {a: [] for a in spec.algorithms}
    for sim, per_algo in results:
        for name, value in per_algo.items():
            if isinstance(value, str):
                failures[name].append((sim, value))
                log.warning("sim %d, %s failed: %s", sim, name, value)
            else:
                raw[name].append(value)
    for name, fails in failures.items():
        if len(fails) > FAILURE_CEILING * spec.n_sims:
            raise HarnessError(
                f"{name} failed in {len(fails)}/{spec.n_sims} simulations (first: {fails[0][1]})"
            )
    means = {name: aggregate(mats) for name, mats in raw.items()}
    manifest = {
        "tool": "chdbench",
        "version": __version__,
        "spec": spec.to_dict(),
        "master_seed": spec.master_seed,
        "dataset": {
            "fingerprint": d.fingerprint(),
            "source": d.source,
            "N": d.n,
            "N1": d.n1,
            "N2": d.n2,
            "columns": list(d.columns),
        },
        "split": planned,
        "exclusions": {name: len(f) for name, f in failures.items()},
        "custom_algorithms": sorted(custom) if custom else [],
    }
    return ExperimentResult(spec, means, raw if spec.retain_raw else {}, failures, manifest)


# --- studies ---------------------------------------------------------------

def ratio_study(data: Dataset, taus: Sequence[float], scenarios: Sequence[Scenario | str] = tuple(SCENARIOS),
                algorithms: Sequence[str] = ALGORITHMS, n_sims: int = 100, master_seed: int = 0,
                sex: str = "all", vars: Sequence[int] | None = None, workers: int = 1,
                custom: Mapping[str, Classifier] | None = None) -> list[dict]:
    """One row per (algorithm, tau, scenario) with every mean metric."""
    rows = []
    for sc in scenarios:
        sc = Scenario.parse(sc) if isinstance(sc, str) else sc
        for tau in taus:
            spec = ExperimentSpec(sc, tau, tuple(algorithms), n_sims, master_seed, sex,
                                  tuple(vars) if vars else None)
            res = run(spec, data, custom=custom, workers=workers)
            for name in spec.algorithms:
                rows.append(result_row(res, name))
    return rows


def result_row(res: ExperimentResult, name: str) -> dict:
    m = res.means[name]
    row = {
        "algorithm": name,
        "scenario": res.spec.scenario.name,
        "tau": res.spec.tau,
        "sex": res.spec.sex,
        "vars": "".join(str(v) for v in res.spec.vars) if res.spec.vars else "1234567",
    }
    row.update(m.as_row())
    row["excluded_sims"] = len(res.failures.get(name, []))
    return row


@dataclass
class SignificanceCounts:
    scenario: Scenario
    tau: float
    n_sims: int
    alphas: tuple[float, ...]
    counts: dict[float, list[int]]  # alpha -> counts for X0..Xp
    unconverged: int
    columns: tuple[int, ...]

    def rows(self) -> list[dict]:
        out = []
        for a in self.alphas:
            row = {"alpha": a, "scenario": self.scenario.name, "n_sims": self.n_sims,
                   "unconverged": self.unconverged}
            row.update({f"X{j}": c for j, c in zip((0, *self.columns), self.counts[a])})
            out.append(row)
        return out


def significance_study(data: Dataset, scenario: Scenario | str, tau: float = 0.8,
                       alphas: Sequence[float] = (0.01, 0.05, 0.10), n_sims: int = 1000,
                       master_seed: int = 0, sex: str = "all") -> SignificanceCounts:
    """Count, per coefficient and level, how often the Wald test rejects zero."""
    scenario = Scenario.parse(scenario) if isinstance(scenario, str) else scenario
    d = prepare(data, sex)
    counts = {a: [0] * (d.p + 1) for a in alphas}
    unconverged = 0
    for k in range(n_sims):
        split = split_for_sim(d, scenario, tau, master_seed, k)
        tr = split.train
        try:
            model = fit_logistic(d.X[tr], d.y[tr])
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.warning("sim %d: logistic fit failed: %s", k, exc)
            unconverged += 1
            continue
        if not model.converged:
            unconverged += 1
            continue
        for a in alphas:
            for j, flag in enumerate(wald_significance(model, a)):
                counts[a][j] += int(bool(flag))
    return SignificanceCounts(scenario, tau, n_sims, tuple(alphas), counts, unconverged, d.columns)


LOGISTIC_VARIANTS = ((1, 2, 3, 4, 5, 6, 7), (1, 3, 7), (1, 2, 3, 7))


def logistic_variants_study(data: Dataset, scenario: Scenario | str, tau: float = 0.8, n_sims: int = 1000,
                            master_seed: int = 0, variants: Sequence[Sequence[int]] = LOGISTIC_VARIANTS,
                            sex: str = "all") -> dict[tuple[int, ...], PerformanceMatrix]:
    """Paired logistic classifiers on several variable sets; returns mean matrices."""
    scenario = Scenario.parse(scenario) if isinstance(scenario, str) else scenario
    out = {}
    for vs in variants:
        spec = ExperimentSpec(scenario, tau, ("Logit",), n_sims, master_seed, sex, tuple(vs))
        out[tuple(vs)] = run(spec, data).means["Logit"]
    return out
