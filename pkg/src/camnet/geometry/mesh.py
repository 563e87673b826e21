"""Triangle-mesh scene representation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Triangles with area at or below this (in m^2) are treated as degenerate
# and dropped at construction time.
DEGENERATE_AREA = 1e-12


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, np.float64).reshape(3))
        object.__setattr__(self, "max", np.asarray(self.max, np.float64).reshape(3))
        if not np.all(self.min <= self.max):
            raise ValueError("Aabb min must be <= max componentwise")

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max - self.min))

    def contains_box(self, other: "Aabb", tol: float = 1e-9) -> bool:
        return bool(
            np.all(self.min <= other.min + tol) and np.all(self.max >= other.max - tol)
        )

    def contains_point(self, p) -> bool:
        p = np.asarray(p, np.float64)
        return bool(np.all(p >= self.min) and np.all(p <= self.max))


class TriangleMesh:
    """Immutable triangle soup in meters.

    Degenerate (zero-area) triangles and triangles with repeated vertex
    indices are dropped on construction; the number removed is kept in
    ``n_dropped_degenerate``. Optional per-triangle object labels survive the
    filtering.
    """

    def __init__(self, vertices, triangles, labels=None, label_names=None):
        vertices = np.ascontiguousarray(vertices, np.float64).reshape(-1, 3)
        triangles = np.ascontiguousarray(triangles, np.int32).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError("triangle index out of range")

        keep = _nondegenerate_mask(vertices, triangles)
        self.n_dropped_degenerate = int(len(triangles) - keep.sum())
        triangles = triangles[keep]

        self.vertices = vertices
        self.triangles = triangles
        self.labels = None
        self.label_names = None
        if labels is not None:
            labels = np.asarray(labels, np.int32).reshape(-1)
            if len(labels) != len(keep):
                raise ValueError("labels must have one entry per input triangle")
            self.labels = np.ascontiguousarray(labels[keep])
            self.label_names = list(label_names) if label_names is not None else None
            self.labels.flags.writeable = False
        self.vertices.flags.writeable = False
        self.triangles.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def bounds(self) -> Aabb:
        if not len(self.vertices):
            z = np.zeros(3)
            return Aabb(z, z)
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def triangle_vertices(self) -> np.ndarray:
        """(n_triangles, 3, 3) array of the corner positions."""
        return self.vertices[self.triangles]

    def __repr__(self):
        return (
            f"TriangleMesh({self.n_vertices} vertices, {self.n_triangles} triangles)"
        )


def _nondegenerate_mask(vertices, triangles):
    if not len(triangles):
        return np.zeros(0, bool)
    tri = vertices[triangles]
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    area = 0.5 * np.linalg.norm(cross, axis=1)
    distinct = (
        (triangles[:, 0] != triangles[:, 1])
        & (triangles[:, 1] != triangles[:, 2])
        & (triangles[:, 0] != triangles[:, 2])
    )
    return (area > DEGENERATE_AREA) & distinct
