"""Interactive-latency benchmarks.

Measures how long one camera move takes against point-set size and camera
count, plus the cost of recomputing the whole network from scratch. Rows
are deterministic in layout (cameras on a ring, seeded point sets); only
the timings vary run to run.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import CameraSpec, Pose, Viewpoint
from .discretize import sample_points_uniform
from .geometry import TriangleMesh
from .session import DesignSession


@dataclass
class BenchRow:
    n_points: int
    n_cameras: int
    move_ms_mean: float
    move_ms_max: float
    full_recompute_ms: float

    def as_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "n_cameras": self.n_cameras,
            "move_ms_mean": self.move_ms_mean,
            "move_ms_max": self.move_ms_max,
            "full_recompute_ms": self.full_recompute_ms,
        }


def ring_cameras(mesh: TriangleMesh, spec: CameraSpec, count: int) -> list[Viewpoint]:
    """Evenly spaced cameras on a circle above the scene, aimed at its center."""
    b = mesh.bounds()
    center = b.center
    radius = 0.45 * b.diagonal
    height = b.max[2] + 0.25 * b.diagonal
    views = []
    for i in range(count):
        a = 2 * math.pi * i / max(count, 1)
        pos = center + np.array([radius * math.cos(a), radius * math.sin(a), 0.0])
        pos[2] = height
        views.append(Viewpoint(spec, Pose.look_at(pos, center), i))
    return views


def run_latency_bench(
    mesh: TriangleMesh,
    spec: CameraSpec,
    point_counts,
    camera_counts,
    moves: int = 5,
    seed: int = 0,
    method: str = "zbuffer",
    warmup: bool = True,
) -> list[BenchRow]:
    """Time camera moves for every (points, cameras) pair.

    Each case builds a fresh session, then moves the first camera ``moves``
    times along small deterministic offsets, recording the commit latency
    the session itself measures. ``warmup`` runs one throwaway move first
    so compilation and cache effects stay out of the numbers.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for n_points in point_counts:
        points = sample_points_uniform(mesh, int(n_points), seed)
        for n_cameras in camera_counts:
            cams = ring_cameras(mesh, spec, int(n_cameras))
            session = DesignSession(mesh, points, cams, method=method)
            base = session.viewpoint(0).pose
            if warmup:
                session.move_camera(0, base)
            start = session.latency.count
            for j in range(moves):
                jitter = 0.05 * rng.standard_normal(3)
                session.move_camera(0, Pose(base.position + jitter, base.orientation))
            samples = session.latency.samples_ms[start:]
            t0 = time.perf_counter()
            session.recompute_counts_full()
            full_ms = (time.perf_counter() - t0) * 1e3
            rows.append(
                BenchRow(
                    int(n_points),
                    int(n_cameras),
                    float(np.mean(samples)),
                    float(np.max(samples)),
                    full_ms,
                )
            )
    return rows


def save_bench_csv(rows: list[BenchRow], path, comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.DictWriter(
            fh, ["n_points", "n_cameras", "move_ms_mean", "move_ms_max",
                 "full_recompute_ms"],
        )
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_dict())


def load_bench_csv(path) -> list[BenchRow]:
    rows = []
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for rec in csv.DictReader(lines):
        rows.append(
            BenchRow(
                int(rec["n_points"]), int(rec["n_cameras"]),
                float(rec["move_ms_mean"]), float(rec["move_ms_max"]),
                float(rec["full_recompute_ms"]),
            )
        )
    return rows


def linear_r2(x, y) -> float:
    """Coefficient of determination of the least-squares line through (x, y)."""
    x = np.asarray(x, np.float64)
    y = np.asarray(y, np.float64)
    if len(x) < 2:
        raise ValueError("need at least two samples")
    coeffs = np.polyfit(x, y, 1)
    pred = np.polyval(coeffs, x)
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot
