"""Per-point visibility: depth rendering, occlusion tests, and the
point-camera visibility matrix."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import struct

import numpy as np

from ._kernels import raster_depth
from .camera import Viewpoint, camera_frame_points, project_points
from .discretize import EnvironmentPoints
from .geometry import Aabb, Bvh, TriangleMesh

_MATRIX_MAGIC = b"VIS0"

# Lower bound on the rasterizer near plane, for cameras whose min_range is
# pathologically close to zero.
_NEAR_FLOOR = 1e-6


@dataclass
class DepthBuffer:
    """Z-buffer of one camera: axial depth per pixel, +inf where nothing
    was drawn. Row v=0 is the top image row."""

    width: int
    height: int
    depths: np.ndarray

    def __post_init__(self):
        self.depths = np.ascontiguousarray(self.depths, np.float32).reshape(
            self.height, self.width
        )


def render_depth(mesh: TriangleMesh, viewpoint: Viewpoint) -> DepthBuffer:
    """Rasterize the mesh into the camera's z-buffer.

    Perspective-correct depth, near clipping at the camera's min_range, no
    far clipping (the range gate is applied at lookup time so the buffer
    stays reusable across bias settings).
    """
    spec = viewpoint.spec
    near = max(spec.min_range, _NEAR_FLOOR)
    cam = camera_frame_points(viewpoint.pose, mesh.vertices)
    cam_xyz = np.empty_like(cam)
    cam_xyz[:, 0] = cam[:, 0]
    cam_xyz[:, 1] = cam[:, 1]
    cam_xyz[:, 2] = -cam[:, 2]
    depth = np.full((spec.height, spec.width), np.inf, np.float32)
    raster_depth(
        cam_xyz, mesh.triangles, spec.width, spec.height,
        spec.focal_px, spec.focal_px, *spec.principal_point, near, depth,
    )
    # Interpolation rounding can land a fraction of an ulp below the near
    # plane; clamp so stored depths are never under min_range.
    np.maximum(depth, np.float32(near), out=depth)
    return DepthBuffer(spec.width, spec.height, depth)


def default_depth_bias(bounds, spec) -> float:
    """Depth-test tolerance scaled to scene size and pixel density.

    One-and-a-half scene diagonals' worth of depth spread over the smaller
    image dimension absorbs interpolation error across a pixel footprint.
    """
    if isinstance(bounds, TriangleMesh):
        bounds = bounds.bounds()
    if not isinstance(bounds, Aabb):
        raise TypeError("bounds must be an Aabb or TriangleMesh")
    return 1.5 * bounds.diagonal / min(spec.width, spec.height)


def _points_array(points) -> np.ndarray:
    if isinstance(points, EnvironmentPoints):
        return points.points
    return np.asarray(points, np.float64).reshape(-1, 3)


def visible_points_zbuffer(
    buffer: DepthBuffer, viewpoint: Viewpoint, points, bias: float
) -> np.ndarray:
    """Visibility mask of points against a rendered depth buffer.

    A point is visible when it lies inside the frustum and its depth is at
    most the buffered depth at its pixel plus ``bias``. Pixel lookup rounds
    to the nearest pixel center and clamps to the image.
    """
    pts = _points_array(points)
    uv, depth, valid = project_points(viewpoint, pts)
    iu = np.clip(np.rint(uv[:, 0]).astype(np.int64), 0, buffer.width - 1)
    iv = np.clip(np.rint(uv[:, 1]).astype(np.int64), 0, buffer.height - 1)
    stored = buffer.depths[iv, iu].astype(np.float64)
    return valid & (depth <= stored + bias)


def visible_points_raycast(
    bvh: Bvh, viewpoint: Viewpoint, points, tol: float = 1e-5
) -> np.ndarray:
    """Ground-truth visibility: frustum test plus an occlusion ray per point.

    A point is occluded when some triangle is hit strictly closer than the
    point (within ``tol`` meters, so points lying on a surface do not
    occlude themselves).
    """
    pts = _points_array(points)
    _, _, valid = project_points(viewpoint, pts)
    vis = valid.copy()
    idx = np.nonzero(valid)[0]
    if not len(idx):
        return vis
    delta = pts[idx] - viewpoint.pose.position
    dist = np.linalg.norm(delta, axis=1)
    safe = np.maximum(dist, 1e-30)
    dirs = delta / safe[:, None]
    hits = bvh.ray_batch(
        np.broadcast_to(viewpoint.pose.position, (len(idx), 3)), dirs, dist - tol
    )
    vis[idx[np.isfinite(hits)]] = False
    return vis


class VisibilityMatrix:
    """Boolean points-by-cameras visibility, column-contiguous.

    Entry ``(e, v)`` is True when camera ``v`` sees point ``e``. Columns
    are the unit of access during optimization, hence the layout.
    """

    def __init__(self, bits: np.ndarray):
        self.bits = np.asfortranarray(bits, dtype=bool)
        if self.bits.ndim != 2:
            raise ValueError("visibility matrix must be 2-D")

    @property
    def n_points(self) -> int:
        return self.bits.shape[0]

    @property
    def m_cameras(self) -> int:
        return self.bits.shape[1]

    def column(self, v: int) -> np.ndarray:
        if not 0 <= v < self.m_cameras:
            raise IndexError(f"camera id {v} out of range [0, {self.m_cameras})")
        return self.bits[:, v]

    def save(self, path) -> None:
        """Bit-packed binary dump; 8 matrix entries per byte."""
        with open(path, "wb") as fh:
            fh.write(_MATRIX_MAGIC)
            fh.write(struct.pack("<QI", self.n_points, self.m_cameras))
            packed = np.packbits(
                np.ascontiguousarray(self.bits).reshape(-1), bitorder="little"
            )
            fh.write(packed.tobytes())

    @classmethod
    def load(cls, path) -> "VisibilityMatrix":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != _MATRIX_MAGIC:
            raise ValueError(f"{path}: not a visibility matrix file (bad magic)")
        n, m = struct.unpack_from("<QI", data, 4)
        need = 16 + (n * m + 7) // 8
        if len(data) < need:
            raise ValueError(f"{path}: truncated visibility matrix file")
        flat = np.unpackbits(
            np.frombuffer(data, np.uint8, (n * m + 7) // 8, 16),
            count=n * m, bitorder="little",
        )
        return cls(flat.reshape(n, m).astype(bool))


def build_visibility_matrix(
    mesh: TriangleMesh,
    candidates,
    points,
    method: str = "zbuffer",
    bias: float | None = None,
    bvh: Bvh | None = None,
    n_jobs: int = 1,
) -> VisibilityMatrix:
    """Evaluate visibility of every point from every candidate camera.

    ``method`` picks the z-buffer path (fast, default) or the ray-cast
    path (exact, needs a BVH which is built on demand). ``bias`` applies
    to the z-buffer test only; None uses :func:`default_depth_bias` per
    camera. Columns are independent, so ``n_jobs`` threads fan out over
    cameras without affecting the result.
    """
    if method not in ("zbuffer", "raycast"):
        raise ValueError(f"unknown visibility method {method!r}")
    pts = _points_array(points)
    views = list(candidates)
    bits = np.zeros((len(pts), len(views)), bool, order="F")
    if method == "raycast" and bvh is None:
        bvh = Bvh(mesh)
    bounds = mesh.bounds()

    def column(i: int) -> None:
        vp = views[i]
        if method == "zbuffer":
            b = default_depth_bias(bounds, vp.spec) if bias is None else bias
            buf = render_depth(mesh, vp)
            bits[:, i] = visible_points_zbuffer(buf, vp, pts, b)
        else:
            bits[:, i] = visible_points_raycast(bvh, vp, pts)

    if n_jobs > 1 and len(views) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(column, range(len(views))))
    else:
        for i in range(len(views)):
            column(i)
    return VisibilityMatrix(bits)


def f_counts(matrix: VisibilityMatrix, camera_ids) -> np.ndarray:
    """Per-point count of selected cameras that see the point, int32."""
    ids = np.asarray(sorted(camera_ids), np.int64)
    if len(ids) == 0:
        return np.zeros(matrix.n_points, np.int32)
    if len(np.unique(ids)) != len(ids):
        raise ValueError("camera ids must be distinct")
    if ids[0] < 0 or ids[-1] >= matrix.m_cameras:
        raise ValueError("camera id out of range")
    return matrix.bits[:, ids].sum(axis=1, dtype=np.int32)
