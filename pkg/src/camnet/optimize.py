"""Camera selection under a cardinality budget.

The naive greedy and the lazy variant produce bit-identical selections:
both evaluate candidate gains through the same per-column kernel, and both
break ties toward the lowest camera id. The lazy variant only skips
re-evaluations that submodularity proves redundant, which is why it
refuses regularized objectives unless explicitly overridden.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .objective import (
    QualityFunction,
    Regularizer,
    Solution,
    regularized_objective,
)
from .visibility import VisibilityMatrix


class BudgetExceeded(RuntimeError):
    """Exhaustive search would exceed its evaluation budget."""


@dataclass(frozen=True)
class OptimizerReport:
    """Outcome of one optimizer run.

    ``gains`` holds the objective increase of each selection in order;
    empty for optimizers without incremental structure. ``value`` is the
    final (regularized) objective, recomputed from scratch.
    """

    solution: Solution
    gains: tuple[float, ...]
    evaluations: int
    wall_time_s: float
    value: float
    method: str
    notes: tuple[str, ...] = ()


def _check_inputs(matrix: VisibilityMatrix, candidates, k: int) -> int:
    m = matrix.m_cameras
    if candidates is not None and len(candidates) != m:
        raise ValueError(
            f"candidate count {len(candidates)} does not match matrix columns {m}"
        )
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    return m


def _gain_column(dw: np.ndarray, col: np.ndarray) -> float:
    # Single shared gain kernel: both greedy variants must go through this
    # so their floating-point results are identical.
    return float(dw[col].sum())


def greedy(
    matrix: VisibilityMatrix,
    points,
    candidates,
    k: int,
    quality: QualityFunction,
    regularizer: Regularizer | None = None,
) -> OptimizerReport:
    """Plain greedy: k rounds, each picking the candidate with the largest
    marginal (regularized) gain, lowest id on ties."""
    t0 = time.perf_counter()
    m = _check_inputs(matrix, candidates, k)
    reg = regularizer if regularizer is not None and regularizer.active else None
    counts = np.zeros(matrix.n_points, np.int32)
    selected: list[int] = []
    in_solution = np.zeros(m, bool)
    gains: list[float] = []
    evaluations = 0
    for _ in range(k):
        dw = points.weights * quality.delta_batch(counts)
        best_gain = -math.inf
        best_id = -1
        for v in range(m):
            if in_solution[v]:
                continue
            g = _gain_column(dw, matrix.bits[:, v])
            if reg is not None:
                g -= reg.alpha * reg.added_penalty(selected, v)
            evaluations += 1
            if g > best_gain:
                best_gain = g
                best_id = v
        selected.append(best_id)
        in_solution[best_id] = True
        gains.append(best_gain)
        counts += matrix.bits[:, best_id]
    solution = Solution(tuple(selected), k)
    value = regularized_objective(matrix, points, solution, quality, reg)
    return OptimizerReport(
        solution, tuple(gains), evaluations, time.perf_counter() - t0, value, "greedy"
    )


def lazy_greedy(
    matrix: VisibilityMatrix,
    points,
    candidates,
    k: int,
    quality: QualityFunction,
    regularizer: Regularizer | None = None,
    allow_regularized: bool = False,
) -> OptimizerReport:
    """Greedy with stale-gain reuse.

    Cached gains are upper bounds once the objective is submodular, so a
    candidate whose cached gain already trails the best fresh one never
    needs re-evaluation. A regularized objective can break the bound
    property; pass ``allow_regularized=True`` to accept heuristic results.
    """
    t0 = time.perf_counter()
    m = _check_inputs(matrix, candidates, k)
    reg = regularizer if regularizer is not None and regularizer.active else None
    if reg is not None and not allow_regularized:
        raise ValueError(
            "lazy evaluation assumes nonincreasing gains; the regularized "
            "objective does not guarantee that (pass allow_regularized=True "
            "to run anyway, or use greedy)"
        )
    notes = ("regularized objective: lazy bound reuse is heuristic",) if reg else ()

    counts = np.zeros(matrix.n_points, np.int32)
    selected: list[int] = []
    in_solution = np.zeros(m, bool)
    gains: list[float] = []
    evaluations = 0

    def evaluate(v: int, dw: np.ndarray) -> float:
        g = _gain_column(dw, matrix.bits[:, v])
        if reg is not None:
            g -= reg.alpha * reg.added_penalty(selected, v)
        return g

    dw = points.weights * quality.delta_batch(counts)
    heap: list[tuple[float, int, int]] = []
    last_eval = np.zeros(m, np.int64)
    for v in range(m):
        heap.append((-evaluate(v, dw), v, 0))
        evaluations += 1
    heapq.heapify(heap)

    for _ in range(k):
        version = len(selected)
        if version > 0:
            dw = points.weights * quality.delta_batch(counts)
        while True:
            neg_gain, v, stamp = heapq.heappop(heap)
            if in_solution[v] or stamp < last_eval[v]:
                continue
            if stamp == version:
                best_id, best_gain = v, -neg_gain
                break
            g = evaluate(v, dw)
            evaluations += 1
            last_eval[v] = version
            heapq.heappush(heap, (-g, v, version))
        selected.append(best_id)
        in_solution[best_id] = True
        gains.append(best_gain)
        counts += matrix.bits[:, best_id]
    solution = Solution(tuple(selected), k)
    value = regularized_objective(matrix, points, solution, quality, reg)
    return OptimizerReport(
        solution, tuple(gains), evaluations, time.perf_counter() - t0, value,
        "lazy_greedy", notes,
    )


def brute_force(
    matrix: VisibilityMatrix,
    points,
    candidates,
    k: int,
    quality: QualityFunction,
    regularizer: Regularizer | None = None,
    budget: int = 2_000_000,
) -> OptimizerReport:
    """Exact optimum by enumerating every k-subset, for oracle-sized inputs.

    Refuses instances with more than ``budget`` subsets. Ties go to the
    lexicographically smallest id tuple.
    """
    t0 = time.perf_counter()
    m = _check_inputs(matrix, candidates, k)
    n_subsets = math.comb(m, k)
    if n_subsets > budget:
        raise BudgetExceeded(
            f"{n_subsets} subsets of size {k} from {m} candidates exceeds "
            f"the budget of {budget}"
        )
    reg = regularizer if regularizer is not None and regularizer.active else None
    weights = points.weights
    best_value = -math.inf
    best_ids: tuple[int, ...] | None = None
    evaluations = 0
    for ids in itertools.combinations(range(m), k):
        counts = matrix.bits[:, ids].sum(axis=1, dtype=np.int32)
        value = float(np.dot(weights, quality.t_batch(counts)))
        if reg is not None:
            value -= reg.alpha * reg.penalty(ids)
        evaluations += 1
        if value > best_value:
            best_value = value
            best_ids = ids
    solution = Solution(best_ids, k)
    return OptimizerReport(
        solution, (), evaluations, time.perf_counter() - t0, best_value, "brute_force"
    )


def random_solution(candidates, k: int, rng_seed: int) -> Solution:
    """Uniform k-subset of the candidates, as a seeded baseline."""
    m = len(candidates)
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    rng = np.random.default_rng(rng_seed)
    ids = rng.choice(m, size=k, replace=False)
    return Solution(tuple(int(i) for i in ids), k)
