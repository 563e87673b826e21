"""Estimator-style wrappers around the optimizers.

These follow the scikit-learn conventions (constructor stores params
verbatim, ``fit`` learns, double-underscore-free attributes with trailing
underscores hold results) so selections compose with pipelines and
``clone``. ``X`` is the points-by-cameras visibility matrix; ``transform``
keeps the selected cameras' columns.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .discretize import EnvironmentPoints
from .objective import QualityFunction
from .optimize import brute_force, greedy, lazy_greedy, random_solution
from .visibility import VisibilityMatrix


def _resolve_quality(quality, cap: int) -> QualityFunction:
    if isinstance(quality, QualityFunction):
        return quality
    if quality == "scp":
        return QualityFunction.scp()
    if quality == "threshold_count":
        return QualityFunction.threshold_count(cap)
    raise ValueError(
        f"quality must be 'scp', 'threshold_count', or a QualityFunction, got {quality!r}"
    )


class _BaseSelector(SelectorMixin, BaseEstimator):
    def _validate_fit_input(self, X, sample_weight):
        X = check_array(X, dtype=None, ensure_2d=True)
        self.n_features_in_ = X.shape[1]
        bits = np.asfortranarray(X != 0)
        if sample_weight is None:
            weights = np.ones(X.shape[0])
        else:
            weights = check_array(
                sample_weight, dtype=np.float64, ensure_2d=False
            ).reshape(-1)
            if len(weights) != X.shape[0]:
                raise ValueError("sample_weight length must match rows of X")
        points = EnvironmentPoints(np.zeros((X.shape[0], 3)), weights)
        return VisibilityMatrix(bits), points

    def _get_support_mask(self):
        check_is_fitted(self, "camera_ids_")
        mask = np.zeros(self.n_features_in_, bool)
        mask[self.camera_ids_] = True
        return mask


class GreedySelector(_BaseSelector):
    """Greedy camera selection with the (1 - 1/e) guarantee.

    Parameters
    ----------
    k : number of cameras to select.
    quality : "scp", "threshold_count", or a QualityFunction instance.
    quality_cap : saturation count when quality="threshold_count".
    regularizer : optional Regularizer penalizing camera pairs.
    lazy : reuse stale gain bounds (identical result, fewer evaluations).

    Attributes
    ----------
    camera_ids_ : selected column indices in selection order.
    gains_ : marginal gain of each selection.
    objective_value_ : final objective value.
    n_evaluations_ : gain evaluations spent.
    """

    def __init__(self, k=5, quality="scp", quality_cap=3, regularizer=None, lazy=True):
        self.k = k
        self.quality = quality
        self.quality_cap = quality_cap
        self.regularizer = regularizer
        self.lazy = lazy

    def fit(self, X, y=None, sample_weight=None):
        matrix, points = self._validate_fit_input(X, sample_weight)
        q = _resolve_quality(self.quality, self.quality_cap)
        reg = self.regularizer
        use_lazy = self.lazy and not (reg is not None and reg.active)
        run = lazy_greedy if use_lazy else greedy
        report = run(matrix, points, None, self.k, q, reg)
        self.camera_ids_ = np.asarray(report.solution.ids, np.int64)
        self.gains_ = np.asarray(report.gains)
        self.objective_value_ = report.value
        self.n_evaluations_ = report.evaluations
        return self


class ExhaustiveSelector(_BaseSelector):
    """Exact optimal selection by subset enumeration; small instances only."""

    def __init__(self, k=2, quality="scp", quality_cap=3, regularizer=None,
                 budget=2_000_000):
        self.k = k
        self.quality = quality
        self.quality_cap = quality_cap
        self.regularizer = regularizer
        self.budget = budget

    def fit(self, X, y=None, sample_weight=None):
        matrix, points = self._validate_fit_input(X, sample_weight)
        q = _resolve_quality(self.quality, self.quality_cap)
        report = brute_force(
            matrix, points, None, self.k, q, self.regularizer, budget=self.budget
        )
        self.camera_ids_ = np.asarray(report.solution.ids, np.int64)
        self.objective_value_ = report.value
        self.n_evaluations_ = report.evaluations
        return self


class RandomSelector(_BaseSelector):
    """Uniform random selection, the baseline the optimizers are judged against."""

    def __init__(self, k=5, random_state=0):
        self.k = k
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=None, ensure_2d=True)
        self.n_features_in_ = X.shape[1]
        solution = random_solution(range(X.shape[1]), self.k, self.random_state)
        self.camera_ids_ = np.asarray(solution.ids, np.int64)
        return self
