from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from camnet import (
    ExhaustiveSelector,
    GreedySelector,
    QualityFunction,
    RandomSelector,
    Regularizer,
    VisibilityMatrix,
    greedy,
)
from conftest import random_bit_matrix, random_points


def _X(rng, n=60, m=12, density=0.3):
    return (rng.random((n, m)) < density).astype(np.int8)


def test_greedy_selector_matches_functional_api():
    rng = np.random.default_rng(10)
    X = _X(rng)
    w = rng.uniform(0.5, 2.0, size=len(X))
    sel = GreedySelector(k=4, quality="scp").fit(X, sample_weight=w)

    mat = VisibilityMatrix(np.asfortranarray(X != 0))
    pts = random_points(rng, len(X))
    pts.weights[:] = w
    rep = greedy(mat, pts, None, 4, QualityFunction.scp())
    np.testing.assert_array_equal(sel.camera_ids_, rep.solution.ids)
    np.testing.assert_array_equal(sel.gains_, rep.gains)
    assert sel.objective_value_ == rep.value


def test_lazy_flag_does_not_change_result():
    rng = np.random.default_rng(3)
    X = _X(rng, n=100, m=30)
    a = GreedySelector(k=6, lazy=True).fit(X)
    b = GreedySelector(k=6, lazy=False).fit(X)
    np.testing.assert_array_equal(a.camera_ids_, b.camera_ids_)
    np.testing.assert_array_equal(a.gains_, b.gains_)
    assert a.n_evaluations_ < b.n_evaluations_


def test_transform_keeps_selected_columns():
    rng = np.random.default_rng(5)
    X = _X(rng)
    sel = GreedySelector(k=3).fit(X)
    Xt = sel.transform(X)
    assert Xt.shape == (len(X), 3)
    support = sel.get_support(indices=True)
    np.testing.assert_array_equal(np.sort(sel.camera_ids_), support)
    np.testing.assert_array_equal(Xt, X[:, support])


def test_unfitted_transform_raises():
    rng = np.random.default_rng(5)
    with pytest.raises(NotFittedError):
        GreedySelector().transform(_X(rng))


def test_get_params_and_clone_roundtrip():
    reg = Regularizer.custom(1.0, np.zeros((12, 12)))
    sel = GreedySelector(k=7, quality="threshold_count", quality_cap=2, regularizer=reg, lazy=False)
    params = sel.get_params()
    assert params["k"] == 7
    assert params["quality"] == "threshold_count"
    assert params["regularizer"] is reg
    dup = clone(sel)
    assert dup.get_params()["k"] == 7
    assert dup.get_params()["lazy"] is False


def test_regularized_fit_falls_back_to_plain_greedy():
    rng = np.random.default_rng(8)
    X = _X(rng, m=10)
    positions = rng.uniform(0, 1, size=(10, 3))
    reg = Regularizer.proximity(alpha=0.5, min_separation=2.0, positions=positions)
    sel = GreedySelector(k=3, regularizer=reg, lazy=True).fit(X)
    ref = GreedySelector(k=3, regularizer=reg, lazy=False).fit(X)
    np.testing.assert_array_equal(sel.camera_ids_, ref.camera_ids_)


def test_quality_argument_forms():
    rng = np.random.default_rng(1)
    X = _X(rng)
    GreedySelector(k=2, quality="threshold_count", quality_cap=2).fit(X)
    GreedySelector(k=2, quality=QualityFunction.scp()).fit(X)
    with pytest.raises(ValueError):
        GreedySelector(k=2, quality="bogus").fit(X)


def test_exhaustive_selector_beats_or_ties_greedy():
    rng = np.random.default_rng(44)
    for _ in range(10):
        X = _X(rng, n=30, m=9, density=0.35)
        g = GreedySelector(k=3).fit(X)
        e = ExhaustiveSelector(k=3).fit(X)
        assert e.objective_value_ >= g.objective_value_ - 1e-12


def test_random_selector_seeded():
    rng = np.random.default_rng(0)
    X = _X(rng)
    a = RandomSelector(k=4, random_state=9).fit(X)
    b = RandomSelector(k=4, random_state=9).fit(X)
    np.testing.assert_array_equal(a.camera_ids_, b.camera_ids_)
    assert len(np.unique(a.camera_ids_)) == 4


def test_pipeline_composition():
    rng = np.random.default_rng(6)
    X = _X(rng, n=80, m=15)
    pipe = Pipeline([("select", GreedySelector(k=5))])
    Xt = pipe.fit_transform(X)
    assert Xt.shape == (80, 5)


def test_sample_weight_changes_selection():
    # One camera sees a single heavy point, another sees many light ones.
    X = np.zeros((10, 2), np.int8)
    X[0, 0] = 1
    X[1:, 1] = 1
    w = np.ones(10)
    w[0] = 100.0
    heavy = GreedySelector(k=1).fit(X, sample_weight=w)
    light = GreedySelector(k=1).fit(X)
    assert heavy.camera_ids_[0] == 0
    assert light.camera_ids_[0] == 1
