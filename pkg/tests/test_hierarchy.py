from itertools import combinations

import pytest

from chdbench.hierarchy import complementarity, exhaustive_search, greedy_search, score_subset
from chdbench.splitter import EQ_PROP
from conftest import small_dataset


class TableScorer:
    """Stand-in scorer returning precomputed subset scores."""

    def __init__(self, table, variables, metric="tpr"):
        self.table = table
        self.variables = variables
        self.metric = metric
        self.n_sims = 1
        self.cache = {}

    def __call__(self, vars):
        key = tuple(sorted(vars))
        self.cache[key] = self.table[key]
        return self.cache[key]


def reference_greedy(table, variables):
    order, current = [], float("-inf")
    while len(order) < len(variables):
        cands = [(table[tuple(sorted(order + [v]))], -v, v) for v in variables if v not in order]
        s, _, v = max(cands)
        if s <= current:
            break
        order.append(v)
        current = s
    return order


def random_table(p, seed):
    import numpy as np
    rng = np.random.default_rng(seed)
    vars_ = tuple(range(1, p + 1))
    return {c: float(rng.integers(0, 20)) / 20 for k in range(1, p + 1) for c in combinations(vars_, k)}, vars_


@pytest.mark.parametrize("seed", range(25))
def test_greedy_matches_reference(seed):
    table, vars_ = random_table(5, seed)
    trace = greedy_search(None, EQ_PROP, scorer=TableScorer(table, vars_))
    assert trace.order == reference_greedy(table, vars_)
    assert trace.evaluations <= 5 * 6 // 2
    assert all(b > a for a, b in zip(trace.prefix_scores, trace.prefix_scores[1:]))
    best = exhaustive_search(None, EQ_PROP, scorer=TableScorer(table, vars_))[0]
    assert trace.prefix_scores[-1] <= best.mean_metric


def test_tie_keeps_lowest_index():
    table = {(1,): 0.5, (2,): 0.5, (1, 2): 0.5}
    trace = greedy_search(None, EQ_PROP, scorer=TableScorer(table, (1, 2)))
    assert trace.order == [1]
    assert trace.stopped_because == "no-improvement"


def test_exhaustive_ranking_ties():
    table = {(1,): 0.4, (2,): 0.6, (3,): 0.6, (1, 2): 0.6, (1, 3): 0.1, (2, 3): 0.2, (1, 2, 3): 0.3}
    ranked = exhaustive_search(None, EQ_PROP, scorer=TableScorer(table, (1, 2, 3)))
    assert [s.vars for s in ranked[:3]] == [(2,), (3,), (1, 2)]
    assert len(ranked) == 7


def test_single_variable():
    d = small_dataset(p=1)
    trace = greedy_search(d, EQ_PROP, n_sims=3, master_seed=0)
    assert trace.order == [1] and trace.evaluations == 1


def test_real_scoring_finds_informative_variable():
    d = small_dataset(n1=150, n2=400, p=3, informative=(1,))
    ranked = exhaustive_search(d, EQ_PROP, metric="acc", n_sims=5, master_seed=2)
    assert 2 in ranked[0].vars
    trace = greedy_search(d, EQ_PROP, metric="acc", n_sims=5, master_seed=2)
    assert trace.order[0] == 2
    # memoized: a repeated subset scores identically
    s = score_subset(d, [2], EQ_PROP, metric="acc", n_sims=5, master_seed=2)
    assert s.mean_metric == trace.prefix_scores[0]


def test_bad_metric():
    with pytest.raises(ValueError):
        greedy_search(small_dataset(), EQ_PROP, metric="eprev", n_sims=1)


def test_complementarity():
    class T:
        def __init__(self, order):
            self.order = order
    c = complementarity(T([1, 2, 4, 5, 6, 7]), T([3]), range(1, 8))
    assert c["tnr_is_complement"] and c["union_is_full_set"] and c["disjoint"]
