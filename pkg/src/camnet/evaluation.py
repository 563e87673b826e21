"""Solution quality analysis: cross-function comparison tables, scoring of
externally produced camera networks, and dense coverage audits."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import Viewpoint
from .discretize import EnvironmentPoints, save_points
from .geometry import Bvh, TriangleMesh
from .objective import QualityFunction, Regularizer, Solution, _ids_of
from .optimize import greedy, lazy_greedy
from .visibility import (
    VisibilityMatrix,
    build_visibility_matrix,
    default_depth_bias,
    f_counts,
    render_depth,
    visible_points_raycast,
    visible_points_zbuffer,
)


def _g_from_counts(points, quality: QualityFunction, counts: np.ndarray) -> float:
    return float(np.dot(points.weights, quality.t_batch(counts)))


def _solve(matrix, points, k, quality, regularizer, method):
    if method == "lazy_greedy" and not (regularizer is not None and regularizer.active):
        return lazy_greedy(matrix, points, None, k, quality, regularizer)
    return greedy(matrix, points, None, k, quality, regularizer)


@dataclass
class CrossEvalTable:
    """All-pairs scores of per-function optima.

    ``ratios[i, j]`` is function i's value of function j's solution divided
    by function i's value of its own solution, so the diagonal is exactly
    1.0 and off-diagonal entries measure how well one preference's network
    serves another.
    """

    functions: list[dict]
    solutions: list[Solution]
    ratios: np.ndarray
    coverages: np.ndarray
    mean_ratios: np.ndarray

    @property
    def n_functions(self) -> int:
        return len(self.functions)

    def to_json_dict(self) -> dict:
        return {
            "functions": self.functions,
            "solutions": [list(s.ids) for s in self.solutions],
            "k": [s.k for s in self.solutions],
            "ratios": self.ratios.tolist(),
            "coverages": self.coverages.tolist(),
            "mean_ratios": self.mean_ratios.tolist(),
        }

    def save_json(self, path, extra: dict | None = None) -> None:
        doc = self.to_json_dict()
        if extra:
            doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CrossEvalTable":
        solutions = [
            Solution(tuple(ids), k) for ids, k in zip(doc["solutions"], doc["k"])
        ]
        return cls(
            functions=doc["functions"],
            solutions=solutions,
            ratios=np.asarray(doc["ratios"], np.float64),
            coverages=np.asarray(doc["coverages"], np.float64),
            mean_ratios=np.asarray(doc["mean_ratios"], np.float64),
        )

    def save_csv(self, path, comment: str | None = None) -> None:
        """Matrix as CSV: one row per evaluating function, one column per
        solution, then coverage and mean-ratio summary rows."""
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            n = self.n_functions
            writer.writerow(["function"] + [f"solution_{j}" for j in range(n)])
            for i in range(n):
                name = self.functions[i].get("kind", f"f{i}")
                writer.writerow([f"{i}:{name}"] + [f"{x:.12g}" for x in self.ratios[i]])
            writer.writerow(["coverage"] + [f"{x:.12g}" for x in self.coverages])
            writer.writerow(["mean_ratio"] + [f"{x:.12g}" for x in self.mean_ratios])


def cross_evaluate(
    matrix: VisibilityMatrix,
    points,
    functions: list[QualityFunction],
    k: int,
    regularizer: Regularizer | None = None,
    method: str = "lazy_greedy",
    n_jobs: int = 1,
) -> CrossEvalTable:
    """Optimize once per quality function and score every solution under
    every function.

    Solves are independent, so ``n_jobs`` threads only change wall time,
    never the table. Raises when some function values its own solution at
    zero (the ratio column would be undefined).
    """
    if not functions:
        raise ValueError("at least one quality function required")
    n = len(functions)

    def solve(i: int):
        return _solve(matrix, points, k, functions[i], regularizer, method)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            reports = list(pool.map(solve, range(n)))
    else:
        reports = [solve(i) for i in range(n)]
    solutions = [r.solution for r in reports]

    counts = [f_counts(matrix, s.ids) for s in solutions]
    values = np.empty((n, n))
    for i, q in enumerate(functions):
        for j in range(n):
            values[i, j] = _g_from_counts(points, q, counts[j])
    for i in range(n):
        if values[i, i] == 0.0:
            raise ValueError(
                f"quality function {i} ({functions[i].kind}) scores its own "
                "optimum at zero; ratios are undefined"
            )
    ratios = values / np.diag(values)[:, None]

    total = points.weights.sum()
    coverages = np.array(
        [float(points.weights[c >= 1].sum() / total) for c in counts]
    )
    mean_ratios = ratios.mean(axis=0)
    return CrossEvalTable(
        functions=[q.to_config() for q in functions],
        solutions=solutions,
        ratios=ratios,
        coverages=coverages,
        mean_ratios=mean_ratios,
    )


@dataclass
class ExternalEvaluation:
    """Score row of one fixed camera network under many quality functions."""

    ratios: np.ndarray
    coverage: float
    mean_ratio: float


def evaluate_external_solution(
    matrix: VisibilityMatrix,
    points,
    solution,
    functions: list[QualityFunction],
    k: int | None = None,
    *,
    table: CrossEvalTable | None = None,
    regularizer: Regularizer | None = None,
    method: str = "lazy_greedy",
    mesh: TriangleMesh | None = None,
    visibility_method: str = "zbuffer",
    bias: float | None = None,
) -> ExternalEvaluation:
    """Score a solution that did not come from the optimizer.

    ``solution`` is either candidate ids into ``matrix`` or a sequence of
    :class:`Viewpoint` (then ``mesh`` is required and fresh visibility is
    computed on the same points). An empty solution is fine and scores
    zero everywhere. Denominators come from ``table`` when given,
    otherwise each function is optimized here with the same settings.
    """
    seq = list(solution) if not isinstance(solution, Solution) else list(solution.ids)
    if seq and isinstance(seq[0], Viewpoint):
        if mesh is None:
            raise ValueError("scoring viewpoint solutions requires the scene mesh")
        ext = build_visibility_matrix(
            mesh, seq, points, method=visibility_method, bias=bias
        )
        counts = ext.bits.sum(axis=1, dtype=np.int32)
    else:
        counts = f_counts(matrix, seq)

    if table is not None:
        own_values = [
            _g_from_counts(points, q, f_counts(matrix, s.ids))
            for q, s in zip(functions, table.solutions)
        ]
    else:
        if k is None:
            raise ValueError("k is required when no cross-evaluation table is given")
        own_values = [
            _g_from_counts(
                points, q,
                f_counts(matrix, _solve(matrix, points, k, q, regularizer, method).solution.ids),
            )
            for q in functions
        ]
    ratios = np.empty(len(functions))
    for i, q in enumerate(functions):
        if own_values[i] == 0.0:
            raise ValueError(
                f"quality function {i} ({q.kind}) scores its own optimum at "
                "zero; ratios are undefined"
            )
        ratios[i] = _g_from_counts(points, q, counts) / own_values[i]
    total = points.weights.sum()
    cov = float(points.weights[counts >= 1].sum() / total)
    return ExternalEvaluation(ratios, cov, float(ratios.mean()))


class MemoryBudgetError(ValueError):
    """Audit would not fit in the requested memory budget."""

    def __init__(self, message: str, required_bytes: int):
        super().__init__(message)
        self.required_bytes = required_bytes


@dataclass
class CoverageReport:
    """Dense audit outcome over a regular grid of the scene bounds."""

    total_points: int
    covered_points: int
    coverage: float
    histogram: np.ndarray
    grid_shape: tuple[int, int, int]
    resolution: float
    n_slabs: int
    peak_slab_bytes: int
    uncovered_path: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "total_points": self.total_points,
            "covered_points": self.covered_points,
            "coverage": self.coverage,
            "histogram": self.histogram.tolist(),
            "grid_shape": list(self.grid_shape),
            "resolution": self.resolution,
            "n_slabs": self.n_slabs,
            "peak_slab_bytes": self.peak_slab_bytes,
            "uncovered_path": self.uncovered_path,
        }


# Working-set estimate per grid point during an audit slab: position,
# projection temporaries, counts, and mask.
_AUDIT_BYTES_PER_POINT = 72


def dense_coverage_audit(
    mesh: TriangleMesh,
    cameras: list[Viewpoint],
    audit_resolution: float,
    *,
    method: str = "zbuffer",
    bias: float | None = None,
    memory_budget_bytes: int = 512 << 20,
    uncovered_path=None,
) -> CoverageReport:
    """Recheck a finished design on a grid much denser than the planning
    points.

    The scene bounds are resampled at ``audit_resolution`` meters and
    streamed through visibility in z-slabs sized to the memory budget, so
    grids far larger than RAM-resident point sets stay feasible. Depth
    buffers (or the BVH) are computed once per camera and reused across
    slabs. Raises :class:`MemoryBudgetError` when even a single grid row
    plus the fixed per-camera state exceeds the budget, reporting the
    budget that would be required.
    """
    if audit_resolution <= 0:
        raise ValueError("audit_resolution must be > 0")
    if method not in ("zbuffer", "raycast"):
        raise ValueError(f"unknown visibility method {method!r}")
    bounds = mesh.bounds()
    ext = bounds.extents
    shape = tuple(max(1, int(round(ext[a] / audit_resolution))) for a in range(3))
    nx, ny, nz = shape
    spacing = ext / np.array(shape, np.float64)
    total = nx * ny * nz
    m = len(cameras)

    fixed = 0
    buffers: list = []
    bvh = None
    if method == "zbuffer":
        for vp in cameras:
            buffers.append(render_depth(mesh, vp))
            fixed += vp.spec.width * vp.spec.height * 4
        biases = [
            default_depth_bias(bounds, vp.spec) if bias is None else bias
            for vp in cameras
        ]
    else:
        bvh = Bvh(mesh)
        fixed += bvh.n_nodes * 60 + mesh.n_triangles * 80

    layer_bytes = nx * ny * _AUDIT_BYTES_PER_POINT
    if fixed + layer_bytes > memory_budget_bytes:
        raise MemoryBudgetError(
            f"audit needs at least {fixed + layer_bytes} bytes "
            f"({fixed} fixed plus one {nx}x{ny} grid layer), budget is "
            f"{memory_budget_bytes}",
            required_bytes=fixed + layer_bytes,
        )
    layers_per_slab = max(1, int((memory_budget_bytes - fixed) // layer_bytes))

    xs = bounds.min[0] + spacing[0] * (np.arange(nx) + 0.5)
    ys = bounds.min[1] + spacing[1] * (np.arange(ny) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    layer_xy = np.column_stack([gx.ravel(order="F"), gy.ravel(order="F")])

    histogram = np.zeros(m + 1, np.int64)
    covered = 0
    uncovered_chunks: list[np.ndarray] = []
    n_slabs = 0
    peak = 0
    for z0 in range(0, nz, layers_per_slab):
        z1 = min(nz, z0 + layers_per_slab)
        zs = bounds.min[2] + spacing[2] * (np.arange(z0, z1) + 0.5)
        pts = np.empty(((z1 - z0) * nx * ny, 3))
        for j, z in enumerate(zs):
            sl = slice(j * nx * ny, (j + 1) * nx * ny)
            pts[sl, :2] = layer_xy
            pts[sl, 2] = z
        counts = np.zeros(len(pts), np.int32)
        for ci, vp in enumerate(cameras):
            if method == "zbuffer":
                counts += visible_points_zbuffer(buffers[ci], vp, pts, biases[ci])
            else:
                counts += visible_points_raycast(bvh, vp, pts)
        histogram += np.bincount(counts, minlength=m + 1)
        covered += int((counts >= 1).sum())
        if uncovered_path is not None:
            uncovered_chunks.append(pts[counts == 0])
        n_slabs += 1
        peak = max(peak, len(pts) * _AUDIT_BYTES_PER_POINT)

    out_path = None
    if uncovered_path is not None:
        miss = (
            np.concatenate(uncovered_chunks) if uncovered_chunks else np.zeros((0, 3))
        )
        save_points(EnvironmentPoints(miss), uncovered_path)
        out_path = str(uncovered_path)

    return CoverageReport(
        total_points=total,
        covered_points=covered,
        coverage=covered / total,
        histogram=histogram,
        grid_shape=shape,
        resolution=audit_resolution,
        n_slabs=n_slabs,
        peak_slab_bytes=peak + fixed,
        uncovered_path=out_path,
    )
