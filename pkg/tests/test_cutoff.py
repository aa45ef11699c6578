import numpy as np
import pytest

from chdbench.cutoff import (
    CutoffCurves,
    NoCrossing,
    curves_from_proba,
    default_grid,
    equilibrium_sampling,
    intersections,
    sweep,
)
from chdbench.regressors import fit_logistic
from chdbench.splitter import EQ_PROP, PROP_PROP
from conftest import small_dataset


def test_grid():
    g = default_grid()
    assert len(g) == 101 and g[0] == 0.0 and g[-1] == 1.0 and g[37] == 0.37


def test_zero_cutoff_everything_positive():
    prob = np.array([0.0, 0.3, 0.9, 1.0])
    c = curves_from_proba(prob, np.array([1, 0, 1, 0]))
    assert (c.tp[0], c.fp[0], c.fn[0], c.tn[0]) == (2, 2, 0, 0)
    # at cutoff 1 only the exact 1.0 qualifies
    assert (c.tp[-1], c.fp[-1]) == (0, 1)


def test_curves_monotone_and_conserved():
    rng = np.random.default_rng(0)
    prob, y = rng.random(300), rng.integers(0, 2, 300)
    c = curves_from_proba(prob, y)
    assert np.all(np.diff(c.tp) <= 0) and np.all(np.diff(c.fp) <= 0)
    assert np.all(np.diff(c.fn) >= 0) and np.all(np.diff(c.tn) >= 0)
    np.testing.assert_array_equal(c.tp + c.fn, y.sum())
    np.testing.assert_array_equal(c.tn + c.fp, (1 - y).sum())


def linear_curves():
    g = default_grid()
    tp = 100 * (1 - g)
    return CutoffCurves(g, tp, tp.copy(), 100 * g, 100 * g)


def test_symmetric_lines_cross_at_half():
    est = intersections(linear_curves())
    for name, (x, y) in est.pair_points.items():
        assert x == pytest.approx(0.5, abs=1e-12), name
    assert est.equilibrium_cutoff == pytest.approx(0.5)
    assert est.centroid[1] == pytest.approx(50.0)


def test_interpolated_crossing_between_grid_points():
    g = np.array([0.0, 0.1, 0.2])
    tn = np.array([0, 30, 60])
    tp = np.array([50, 40, 30])
    c = CutoffCurves(g, tp, np.zeros(3), np.zeros(3), tn)
    x, y = intersections(c).pair_points["TN-TP"]
    # lines 300x and 50-100x meet at x=0.125
    assert x == pytest.approx(0.125) and y == pytest.approx(37.5)


def test_multiple_crossings_use_median():
    g = np.linspace(0, 1, 11)
    tp = np.full(11, 5.0)
    tn = np.array([0, 10, 0, 10, 0, 10, 0, 10, 0, 10, 10], float)
    c = CutoffCurves(g, tp, np.full(11, 100.0), np.zeros(11), tn)
    x, _ = intersections(c).pair_points["TN-TP"]
    assert x == pytest.approx(np.median([0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85]))


def test_no_crossing_pair_excluded():
    g = default_grid()
    c = CutoffCurves(g, np.full(101, 10), np.full(101, 100), 100 * g, 100 * g + 50)
    est = intersections(c)
    # TN runs 50..150 and never meets the flat TP=10 line
    assert est.excluded_pairs == ("TN-TP",)
    assert est.pair_points["TN-TP"] is None
    flat = CutoffCurves(g, np.full(101, 1), np.full(101, 2), np.full(101, 3), np.full(101, 4))
    with pytest.raises(NoCrossing):
        intersections(flat)


def test_tn_fp_crossing_is_tnr_half():
    d = small_dataset(n1=150, n2=450, p=3, informative=(0, 1))
    model = fit_logistic(d.X[::2], d.y[::2])
    c = sweep(model, d.X[1::2], d.y[1::2])
    x, _ = intersections(c).pair_points["TN-FP"]
    tnr = (np.interp(x, c.grid, c.tn)) / (c.tn[0] + c.fp[0])
    assert tnr == pytest.approx(0.5, abs=0.02)


def test_sampling_single_sim_equals_its_crossing():
    d = small_dataset(n1=120, n2=480, p=3)
    s = equilibrium_sampling(d, PROP_PROP, 0.8, "logistic", 1, master_seed=3)
    assert s.centroid == s.records[0].estimate.centroid


def test_equilibrium_tracks_training_prevalence():
    d = small_dataset(n1=120, n2=480, p=3, informative=(0, 1, 2))
    prop = equilibrium_sampling(d, PROP_PROP, 0.8, "logistic", 20, master_seed=1)
    eq = equilibrium_sampling(d, EQ_PROP, 0.8, "logistic", 20, master_seed=1)
    assert prop.equilibrium_cutoff < 0.35 < eq.equilibrium_cutoff
    assert eq.equilibrium_cutoff == pytest.approx(0.5, abs=0.08)
    again = equilibrium_sampling(d, EQ_PROP, 0.8, "logistic", 20, master_seed=1)
    assert again.centroid == eq.centroid


def test_bad_model_kind():
    with pytest.raises(ValueError):
        equilibrium_sampling(small_dataset(), PROP_PROP, 0.8, "tree", 1, 0)
