"""Variable-hierarchy search over feature subsets.

Exhaustive mode scores all 2^p - 1 subsets. Greedy mode grows one prefix:
score every single variable, keep the best, then repeatedly try each unused
variable as an extension and keep the best only if it strictly improves the
mean metric. That costs at most p(p+1)/2 subset scores.

Every subset is scored with the same master seed, so all subsets see the
same sequence of splits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

from .dataset import Dataset
from .harness import ExperimentSpec, prepare, run
from .splitter import Scenario

log = logging.getLogger(__name__)

HIERARCHY_METRICS = ("tpr", "tnr", "acc", "pprec")
MAX_EXHAUSTIVE_P = 15


@dataclass(frozen=True)
class SubsetScore:
    vars: tuple[int, ...]
    mean_metric: float
    n_sims: int


@dataclass
class HierarchyTrace:
    order: list[int]
    prefix_scores: list[float]
    evaluations: int
    stopped_because: str
    metric: str = "tpr"
    scored: dict[tuple[int, ...], float] = field(default_factory=dict)
    cumulative_evaluations: list[int] = field(default_factory=list)

    def rows(self) -> list[dict]:
        """Per-step table: step, variable joined, mean metric, evaluations so far."""
        return [
            {"step": k + 1, "variable": v, "prefix": "-".join(map(str, self.order[:k + 1])),
             "mean_metric": s, "evaluations": e}
            for k, (v, s, e) in enumerate(zip(self.order, self.prefix_scores, self.cumulative_evaluations))
        ]


class Scorer:
    """Memoized subset scoring against one dataset and one design."""

    def __init__(self, d: Dataset, scenario: Scenario | str, tau: float, algorithm: str, metric: str,
                 n_sims: int, master_seed: int, sex: str = "all", workers: int = 1):
        if metric not in HIERARCHY_METRICS:
            raise ValueError(f"metric must be one of {HIERARCHY_METRICS}")
        self.base = prepare(d, sex)
        self.scenario = Scenario.parse(scenario) if isinstance(scenario, str) else scenario
        self.tau = tau
        self.algorithm = algorithm
        self.metric = metric
        self.n_sims = n_sims
        self.master_seed = master_seed
        self.workers = workers
        self.cache: dict[tuple[int, ...], float] = {}
        self.evaluations = 0

    @property
    def variables(self) -> tuple[int, ...]:
        return self.base.columns

    def __call__(self, vars: Sequence[int]) -> float:
        key = tuple(sorted(vars))
        if key not in self.cache:
            spec = ExperimentSpec(self.scenario, self.tau, (self.algorithm,), self.n_sims,
                                  self.master_seed, "all", key)
            value = run(spec, self.base, workers=self.workers).means[self.algorithm].metric(self.metric)
            self.cache[key] = float("-inf") if value is None else value
            self.evaluations += 1
        return self.cache[key]


def score_subset(d: Dataset, vars: Sequence[int], scenario: Scenario | str, tau: float = 0.8,
                 algorithm: str = "DDS1", metric: str = "tpr", n_sims: int = 1000, master_seed: int = 0,
                 sex: str = "all", workers: int = 1) -> SubsetScore:
    scorer = Scorer(d, scenario, tau, algorithm, metric, n_sims, master_seed, sex, workers)
    key = tuple(sorted(set(vars)))
    return SubsetScore(key, scorer(key), n_sims)


def _rank_key(s: SubsetScore):
    return (-s.mean_metric, len(s.vars), s.vars)


def exhaustive_search(d: Dataset, scenario: Scenario | str, tau: float = 0.8, algorithm: str = "DDS1",
                      metric: str = "tpr", n_sims: int = 1000, master_seed: int = 0, sex: str = "all",
                      workers: int = 1, scorer: Scorer | None = None,
                      progress: Callable[[int, int], None] | None = None) -> list[SubsetScore]:
    """All nonempty subsets, best first; ties go to the smaller, then lexicographically first, subset."""
    scorer = scorer or Scorer(d, scenario, tau, algorithm, metric, n_sims, master_seed, sex, workers)
    cols = scorer.variables
    if len(cols) > MAX_EXHAUSTIVE_P:
        raise ValueError(f"exhaustive search over p={len(cols)} variables is too large (max {MAX_EXHAUSTIVE_P})")
    subsets = [c for k in range(1, len(cols) + 1) for c in combinations(cols, k)]
    out = []
    for i, vs in enumerate(subsets):
        out.append(SubsetScore(vs, scorer(vs), scorer.n_sims))
        if progress:
            progress(i + 1, len(subsets))
    return sorted(out, key=_rank_key)


def greedy_search(d: Dataset, scenario: Scenario | str, tau: float = 0.8, algorithm: str = "DDS1",
                  metric: str = "tpr", n_sims: int = 1000, master_seed: int = 0, sex: str = "all",
                  workers: int = 1, scorer: Scorer | None = None) -> HierarchyTrace:
    scorer = scorer or Scorer(d, scenario, tau, algorithm, metric, n_sims, master_seed, sex, workers)
    cols = list(scorer.variables)
    if not cols:
        raise ValueError("no variables to search")
    order: list[int] = []
    scores: list[float] = []
    evaluations = 0
    cumulative: list[int] = []
    current = float("-inf")
    stopped = "all-variables"
    while len(order) < len(cols):
        best_v, best_s = None, float("-inf")
        for v in cols:  # ascending, so ties keep the lowest index
            if v in order:
                continue
            s = scorer(order + [v])
            evaluations += 1
            if s > best_s:
                best_v, best_s = v, s
        if not best_s > current:
            stopped = "no-improvement"
            break
        order.append(best_v)
        scores.append(best_s)
        cumulative.append(evaluations)
        current = best_s
        log.info("hierarchy %s -> %.4f", order, best_s)
    scored = {k: v for k, v in scorer.cache.items()}
    return HierarchyTrace(order, scores, evaluations, stopped, scorer.metric, scored, cumulative)


def tnr_hierarchy(d: Dataset, scenario: Scenario | str, tau: float = 0.8, algorithm: str = "DDS1",
                  n_sims: int = 1000, master_seed: int = 0, sex: str = "all", workers: int = 1,
                  metric: str = "tnr") -> HierarchyTrace:
    return greedy_search(d, scenario, tau, algorithm, metric, n_sims, master_seed, sex, workers)


def complementarity(tpr_trace: HierarchyTrace, tnr_trace: HierarchyTrace, variables: Sequence[int]) -> dict:
    """Compare the TNR hierarchy against the variables the TPR hierarchy left out."""
    left_out = sorted(set(variables) - set(tpr_trace.order))
    tnr_set = sorted(tnr_trace.order)
    return {
        "tpr_order": list(tpr_trace.order),
        "tnr_order": list(tnr_trace.order),
        "tpr_left_out": left_out,
        "tnr_is_complement": tnr_set == left_out,
        "union_is_full_set": sorted(set(tpr_trace.order) | set(tnr_trace.order)) == sorted(variables),
        "disjoint": not set(tpr_trace.order) & set(tnr_trace.order),
    }
