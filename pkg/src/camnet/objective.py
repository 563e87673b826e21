"""Coverage objectives over the visibility matrix.

A quality function maps the number of cameras seeing a point to a score
through a concave saturating table; the objective is the weighted sum of
those scores over all points, optionally penalized for camera placements
that crowd each other. Concavity of the per-point table is what makes the
set objective submodular, so every constructor here validates it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .visibility import VisibilityMatrix, f_counts

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class QualityWeights:
    """Nonincreasing redundancy profile: value ``i`` is the score added by
    the ``i+1``-th camera to see a point. Sums to 1."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, np.float64).reshape(-1)
        if len(v) == 0:
            raise ValueError("at least one weight required")
        if np.any(v < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(np.diff(v) > 0):
            raise ValueError("weights must be nonincreasing")
        if abs(v.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {v.sum()!r}")
        object.__setattr__(self, "values", v)
        v.flags.writeable = False

    def __len__(self) -> int:
        return len(self.values)


def sample_quality_weights(rng_seed: int, length: int = 6) -> QualityWeights:
    """Random redundancy profile: iid uniforms, sorted descending, normalized."""
    rng = np.random.default_rng(rng_seed)
    u = rng.random(length)
    u = np.sort(u)[::-1]
    return QualityWeights(u / u.sum())


class QualityFunction:
    """Saturating per-point score table ``t(count)``.

    ``t(0) = 0``, increments are nonnegative and nonincreasing, and the
    table is constant past its saturation count. Built through the class
    methods; direct construction takes the full table of values at counts
    ``0..saturation``.
    """

    def __init__(self, table, kind: str = "custom_table", params: dict | None = None):
        t = np.asarray(table, np.float64).reshape(-1)
        if len(t) < 2:
            raise ValueError("table needs values for counts 0 and 1 at least")
        if t[0] != 0.0:
            raise ValueError("t(0) must be 0")
        d = np.diff(t)
        if np.any(d < 0):
            raise ValueError("table must be nondecreasing")
        if np.any(np.diff(d) > 1e-12):
            raise ValueError("table increments must be nonincreasing (concave)")
        self.table = t
        self.table.flags.writeable = False
        self.kind = kind
        self.params = dict(params or {})
        # deltas[c] = t(c+1) - t(c), zero at and past saturation
        self._deltas = np.concatenate([d, [0.0]])
        self._deltas.flags.writeable = False

    @classmethod
    def scp(cls) -> "QualityFunction":
        """Plain set cover: a point scores 1 once any camera sees it."""
        return cls([0.0, 1.0], kind="scp")

    @classmethod
    def redundancy(cls, weights: QualityWeights) -> "QualityFunction":
        """Diminishing reward for each additional camera on a point."""
        table = np.concatenate([[0.0], np.cumsum(weights.values)])
        return cls(table, kind="redundancy", params={"weights": weights.values.tolist()})

    @classmethod
    def threshold_count(cls, cap: int) -> "QualityFunction":
        """Linear reward per camera up to ``cap`` cameras."""
        if cap < 1:
            raise ValueError("cap must be >= 1")
        return cls(np.arange(cap + 1, dtype=np.float64), kind="threshold_count",
                   params={"cap": int(cap)})

    @classmethod
    def custom_table(cls, values) -> "QualityFunction":
        return cls(values, kind="custom_table",
                   params={"values": np.asarray(values, np.float64).tolist()})

    @property
    def saturation(self) -> int:
        """Count after which extra cameras add nothing."""
        return len(self.table) - 1

    def t(self, count: int) -> float:
        if count < 0:
            raise ValueError("count must be >= 0")
        return float(self.table[min(count, self.saturation)])

    def t_batch(self, counts: np.ndarray) -> np.ndarray:
        return self.table[np.minimum(counts, self.saturation)]

    def delta_batch(self, counts: np.ndarray) -> np.ndarray:
        """Score increment per point for one more camera at these counts."""
        return self._deltas[np.minimum(counts, self.saturation)]

    def to_config(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_config(cls, cfg: dict) -> "QualityFunction":
        kind = cfg.get("kind")
        if kind == "scp":
            return cls.scp()
        if kind == "redundancy":
            return cls.redundancy(QualityWeights(cfg["weights"]))
        if kind == "threshold_count":
            return cls.threshold_count(cfg["cap"])
        if kind == "custom_table":
            return cls.custom_table(cfg["values"])
        raise ValueError(f"unknown quality function kind {kind!r}")

    def __repr__(self):
        return f"QualityFunction(kind={self.kind!r}, saturation={self.saturation})"


def t_eval(quality: QualityFunction, count: int) -> float:
    return quality.t(count)


@dataclass(frozen=True)
class Solution:
    """Chosen camera ids in selection order, with the target cardinality."""

    ids: tuple[int, ...]
    k: int = -1

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if self.k < 0:
            object.__setattr__(self, "k", len(ids))
        if len(set(ids)) != len(ids):
            raise ValueError("solution ids must be distinct")
        if len(ids) > self.k:
            raise ValueError("solution has more ids than its cardinality bound")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)


def _ids_of(solution) -> tuple[int, ...]:
    if isinstance(solution, Solution):
        return solution.ids
    return tuple(int(v) for v in solution)


class Regularizer:
    """Pairwise placement penalty subtracted from the coverage objective.

    ``alpha`` scales the summed penalty over unordered selected pairs. The
    proximity kind charges ``min_separation - distance`` for pairs closer
    than ``min_separation``; the custom kind reads a symmetric nonnegative
    matrix indexed by camera ids.
    """

    def __init__(self, kind: str, alpha: float, *, min_separation: float = 0.0,
                 positions: np.ndarray | None = None, matrix: np.ndarray | None = None):
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        if kind not in ("none", "proximity", "custom_matrix"):
            raise ValueError(f"unknown regularizer kind {kind!r}")
        self.kind = kind
        self.alpha = float(alpha)
        self.min_separation = float(min_separation)
        self.positions = None
        self.matrix = None
        if kind == "proximity":
            if positions is None:
                raise ValueError("proximity regularizer needs candidate positions")
            if min_separation <= 0:
                raise ValueError("min_separation must be > 0")
            self.positions = np.asarray(positions, np.float64).reshape(-1, 3)
        elif kind == "custom_matrix":
            if matrix is None:
                raise ValueError("custom regularizer needs a penalty matrix")
            m = np.asarray(matrix, np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("penalty matrix must be square")
            if not np.allclose(m, m.T):
                raise ValueError("penalty matrix must be symmetric")
            if np.any(m < 0):
                raise ValueError("penalty matrix must be nonnegative")
            self.matrix = m

    @classmethod
    def none(cls) -> "Regularizer":
        return cls("none", 0.0)

    @classmethod
    def proximity(cls, alpha: float, min_separation: float, positions) -> "Regularizer":
        return cls("proximity", alpha, min_separation=min_separation, positions=positions)

    @classmethod
    def custom(cls, alpha: float, matrix) -> "Regularizer":
        return cls("custom_matrix", alpha, matrix=matrix)

    @property
    def active(self) -> bool:
        return self.kind != "none" and self.alpha > 0.0

    def pair_penalty(self, u: int, v: int) -> float:
        if self.kind == "proximity":
            d = float(np.linalg.norm(self.positions[u] - self.positions[v]))
            return max(0.0, self.min_separation - d)
        if self.kind == "custom_matrix":
            return float(self.matrix[u, v])
        return 0.0

    def penalty(self, ids) -> float:
        """Summed penalty over unordered pairs, in id order."""
        if not self.active:
            return 0.0
        ids = sorted(_ids_of(ids))
        total = 0.0
        for j in range(1, len(ids)):
            for i in range(j):
                total += self.pair_penalty(ids[i], ids[j])
        return total

    def added_penalty(self, ids, v: int) -> float:
        """Penalty increase from adding camera ``v`` to the selection."""
        if not self.active:
            return 0.0
        return sum(self.pair_penalty(u, v) for u in sorted(_ids_of(ids)))


def G_eval(matrix: VisibilityMatrix, points, solution, quality: QualityFunction) -> float:
    """Weighted objective of a selection: sum over points of weight times
    the quality table at that point's camera count."""
    counts = f_counts(matrix, _ids_of(solution))
    return float(np.dot(points.weights, quality.t_batch(counts)))


def marginal_gain(
    matrix: VisibilityMatrix,
    points,
    solution,
    v: int,
    quality: QualityFunction,
    counts: np.ndarray | None = None,
) -> float:
    """Objective increase from adding camera ``v`` to the selection.

    Computed from the per-point count increments rather than two full
    objective evaluations; pass precomputed ``counts`` for the selection to
    skip the recount.
    """
    ids = _ids_of(solution)
    if v in ids:
        raise ValueError(f"camera {v} already selected")
    if counts is None:
        counts = f_counts(matrix, ids)
    dw = points.weights * quality.delta_batch(counts)
    return float(dw[matrix.column(v)].sum())


def regularized_objective(
    matrix: VisibilityMatrix,
    points,
    solution,
    quality: QualityFunction,
    regularizer: Regularizer | None = None,
) -> float:
    value = G_eval(matrix, points, solution, quality)
    if regularizer is not None and regularizer.active:
        value -= regularizer.alpha * regularizer.penalty(solution)
    return value


def coverage(matrix: VisibilityMatrix, points, solution) -> float:
    """Weighted fraction of points seen by at least one selected camera."""
    counts = f_counts(matrix, _ids_of(solution))
    return float(points.weights[counts >= 1].sum() / points.weights.sum())
