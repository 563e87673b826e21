"""Bounding-volume hierarchy for ray queries against a mesh."""

from __future__ import annotations

import numpy as np

from .._kernels import bvh_build, bvh_raycast
from .mesh import Aabb, TriangleMesh


class Bvh:
    """Median-split BVH over a mesh's triangles.

    Construction is deterministic for a given mesh and leaf size: splits use
    a stable sort of triangle centroids along the widest centroid axis, so
    two builds of the same mesh yield identical trees. Query results do not
    depend on the leaf size.
    """

    def __init__(self, mesh: TriangleMesh, leaf_size: int = 4):
        if mesh.n_triangles == 0:
            raise ValueError("cannot build a BVH over an empty mesh")
        if leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        tri = mesh.triangle_vertices()
        self.mesh = mesh
        self.leaf_size = int(leaf_size)
        self._v0 = np.ascontiguousarray(tri[:, 0])
        self._e1 = np.ascontiguousarray(tri[:, 1] - tri[:, 0])
        self._e2 = np.ascontiguousarray(tri[:, 2] - tri[:, 0])
        bmin = tri.min(axis=1)
        bmax = tri.max(axis=1)
        centroids = tri.mean(axis=1)
        (
            self.node_bmin,
            self.node_bmax,
            self.node_left,
            self.node_right,
            self.node_start,
            self.node_count,
            self.order,
        ) = bvh_build(bmin, bmax, centroids, self.leaf_size)

    @property
    def n_nodes(self) -> int:
        return len(self.node_left)

    def root_bounds(self) -> Aabb:
        return Aabb(self.node_bmin[0], self.node_bmax[0])

    def ray(self, origin, direction, t_max: float) -> float | None:
        """Nearest hit distance along a unit-length ray, or None for a miss."""
        hit = self.ray_batch(
            np.asarray(origin, np.float64).reshape(1, 3),
            np.asarray(direction, np.float64).reshape(1, 3),
            np.array([t_max], np.float64),
        )[0]
        return float(hit) if np.isfinite(hit) else None

    def ray_batch(self, origins, directions, t_max) -> np.ndarray:
        """Nearest hit distances for a batch of rays; +inf marks misses.

        Directions must be unit length so distances are in meters. Each
        ray's search is capped at its ``t_max`` entry (must be > 0 to hit).
        """
        origins = np.ascontiguousarray(origins, np.float64).reshape(-1, 3)
        directions = np.ascontiguousarray(directions, np.float64).reshape(-1, 3)
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("ray directions must be unit length")
        t_max = np.ascontiguousarray(
            np.broadcast_to(np.asarray(t_max, np.float64), (len(origins),))
        )
        out = np.empty(len(origins), np.float64)
        bvh_raycast(
            self.node_bmin, self.node_bmax, self.node_left, self.node_right,
            self.node_start, self.node_count, self.order,
            self._v0, self._e1, self._e2,
            origins, directions, t_max, out,
        )
        return out


def build_bvh(mesh: TriangleMesh, leaf_size: int = 4) -> Bvh:
    return Bvh(mesh, leaf_size)


def ray_intersect(bvh: Bvh, origin, direction, t_max: float) -> float | None:
    """Nearest intersection of one ray with the mesh, within (0, t_max]."""
    if t_max <= 0:
        raise ValueError("t_max must be > 0")
    return bvh.ray(origin, direction, t_max)


def ray_intersect_brute(mesh: TriangleMesh, origin, direction, t_max: float) -> float | None:
    """Reference nearest-hit test against every triangle, no acceleration.

    Kept as an independent check for the BVH path; vectorized with numpy
    but O(n_triangles) per ray.
    """
    origin = np.asarray(origin, np.float64).reshape(3)
    direction = np.asarray(direction, np.float64).reshape(3)
    tri = mesh.triangle_vertices()
    v0 = tri[:, 0]
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    p = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        s = origin - v0
        u = np.einsum("ij,ij->i", s, p) * inv
        q = np.cross(s, e1)
        v = (q @ direction) * inv
        t = np.einsum("ij,ij->i", e2, q) * inv
    eps = 1e-9
    ok = (
        (np.abs(det) > 1e-14)
        & (u >= -eps) & (v >= -eps) & (u + v <= 1.0 + eps)
        & (t > 0.0) & (t <= t_max)
    )
    if not ok.any():
        return None
    return float(t[ok].min())
