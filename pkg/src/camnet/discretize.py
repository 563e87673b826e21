"""Scene discretization: observed points and candidate camera placements.

The continuous environment is reduced to a finite weighted point set (the
locations whose visibility matters) and a finite set of camera placements
to choose from. Both are deterministic functions of their inputs and, for
the sampled variants, of an explicit seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import CameraSpec, Pose, Viewpoint, quat_normalize, quat_to_matrix
from .geometry import Aabb, TriangleMesh

_POINTS_MAGIC = b"PTS0"


@dataclass(frozen=True, eq=False)
class RoiBox:
    """Oriented box region of interest with a voxel grid resolution.

    ``half_extents`` are the half side lengths in the box frame,
    ``resolution`` the number of voxels per axis.
    """

    center: np.ndarray
    half_extents: np.ndarray
    resolution: tuple[int, int, int]
    orientation: np.ndarray = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, np.float64).reshape(3))
        object.__setattr__(
            self, "half_extents", np.asarray(self.half_extents, np.float64).reshape(3)
        )
        object.__setattr__(self, "orientation", quat_normalize(self.orientation))
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))
        if np.any(self.half_extents <= 0):
            raise ValueError("half_extents must be positive")
        if any(n < 1 for n in self.resolution):
            raise ValueError("resolution must be >= 1 per axis")

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.resolution
        return nx * ny * nz

    @property
    def voxel_size(self) -> np.ndarray:
        return 2.0 * self.half_extents / np.asarray(self.resolution, np.float64)

    def __eq__(self, other):
        if not isinstance(other, RoiBox):
            return NotImplemented
        return (
            np.array_equal(self.center, other.center)
            and np.array_equal(self.half_extents, other.half_extents)
            and np.array_equal(self.orientation, other.orientation)
            and self.resolution == other.resolution
        )


@dataclass(frozen=True)
class GridBinding:
    """Back-reference from sampled points to the voxel grid they came from."""

    box: RoiBox
    voxel_indices: np.ndarray


@dataclass
class EnvironmentPoints:
    """Weighted points whose visibility is evaluated.

    Weights are strictly positive relevance factors; uniform sampling and
    voxelization assign 1.0. ``grid`` is set when the points are voxel
    centers, for volume round-trips back onto the grid.
    """

    points: np.ndarray
    weights: np.ndarray = None
    grid: GridBinding | None = None

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, np.float64).reshape(-1, 3)
        if self.weights is None:
            self.weights = np.ones(len(self.points), np.float64)
        else:
            self.weights = np.ascontiguousarray(self.weights, np.float64).reshape(-1)
        if len(self.weights) != len(self.points):
            raise ValueError("one weight per point required")
        if np.any(self.weights <= 0):
            raise ValueError("point weights must be strictly positive")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


@dataclass
class CandidateSet:
    """Ordered candidate camera placements; ids are positions in the list."""

    viewpoints: list[Viewpoint]
    provenance: str = "explicit"

    def __post_init__(self):
        self.viewpoints = [
            Viewpoint(v.spec, v.pose, i) for i, v in enumerate(self.viewpoints)
        ]

    def __len__(self) -> int:
        return len(self.viewpoints)

    def __getitem__(self, i: int) -> Viewpoint:
        return self.viewpoints[i]

    def __iter__(self):
        return iter(self.viewpoints)

    def positions(self) -> np.ndarray:
        return np.array([v.pose.position for v in self.viewpoints], np.float64).reshape(
            -1, 3
        )


def voxelize_box(box: RoiBox) -> EnvironmentPoints:
    """Centers of every voxel of the box grid, x index changing fastest.

    The point at flat index ``i`` is voxel ``(ix, iy, iz)`` with
    ``i = ix + nx * (iy + ny * iz)``.
    """
    nx, ny, nz = box.resolution
    sx, sy, sz = box.voxel_size
    hx, hy, hz = box.half_extents
    ax = -hx + sx * (np.arange(nx) + 0.5)
    ay = -hy + sy * (np.arange(ny) + 0.5)
    az = -hz + sz * (np.arange(nz) + 0.5)
    gx, gy, gz = np.meshgrid(ax, ay, az, indexing="ij")
    local = np.column_stack(
        [gx.ravel(order="F"), gy.ravel(order="F"), gz.ravel(order="F")]
    )
    world = box.center + local @ quat_to_matrix(box.orientation).T
    return EnvironmentPoints(
        world, grid=GridBinding(box, np.arange(box.n_voxels, dtype=np.int64))
    )


def sample_segment_viewpoints(
    segments, positions_per_segment: int, orientations, spec: CameraSpec
) -> CandidateSet:
    """Cross product of evenly spaced positions on line segments and a fixed
    orientation list.

    ``segments`` is (S, 2, 3): start and end per segment. Positions include
    both endpoints. Ids run segment-major, then position, then orientation.
    """
    segments = np.asarray(segments, np.float64).reshape(-1, 2, 3)
    if positions_per_segment < 1:
        raise ValueError("positions_per_segment must be >= 1")
    orientations = [quat_normalize(q) for q in orientations]
    if not orientations:
        raise ValueError("at least one orientation required")
    views = []
    for a, b in segments:
        if positions_per_segment == 1:
            stops = np.asarray([0.5 * (a + b)])
        else:
            stops = np.linspace(a, b, positions_per_segment)
        for p in stops:
            for q in orientations:
                views.append(Viewpoint(spec, Pose(p, q)))
    return CandidateSet(views, provenance="segment_grid")


def sample_area_viewpoints(
    polygon, height: float, count: int, spec: CameraSpec, rng_seed: int
) -> CandidateSet:
    """Seeded uniform placements over a horizontal polygon at a fixed height.

    Positions are rejection-sampled inside the polygon; orientations are
    uniform over viewing directions that do not point upward (vertical
    component <= 0). Identical seeds give identical candidate sets.
    """
    polygon = np.asarray(polygon, np.float64).reshape(-1, 2)
    if len(polygon) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    lo = polygon.min(axis=0)
    hi = polygon.max(axis=0)
    xy = np.empty((0, 2))
    while len(xy) < count:
        batch = rng.uniform(lo, hi, size=(max(4 * count, 64), 2))
        xy = np.concatenate([xy, batch[_points_in_polygon(batch, polygon)]])
    xy = xy[:count]

    views = []
    for i in range(count):
        d = _sample_downward_direction(rng)
        pos = np.array([xy[i, 0], xy[i, 1], height])
        views.append(Viewpoint(spec, Pose.look_at(pos, pos + d)))
    return CandidateSet(views, provenance="area_random")


def _sample_downward_direction(rng) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n < 1e-9:
            continue
        v = v / n
        if v[2] <= 0.0:
            return v


def _points_in_polygon(pts, poly) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), bool)
    n = len(poly)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % n]
            crosses = (y1 > y) != (y2 > y)
            x_at = (x2 - x1) * (y - y1) / (y2 - y1) + x1
            inside ^= crosses & (x < x_at)
    return inside


def sample_points_uniform(region, count: int, rng_seed: int) -> EnvironmentPoints:
    """Seeded uniform points in a box region.

    ``region`` is an :class:`Aabb` or a :class:`TriangleMesh`, in which case
    its bounding box stands in for the volume.
    """
    if isinstance(region, TriangleMesh):
        region = region.bounds()
    if not isinstance(region, Aabb):
        raise TypeError("region must be an Aabb or TriangleMesh")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    pts = rng.uniform(region.min, region.max, size=(count, 3))
    return EnvironmentPoints(pts)


def merge_point_sets(sets) -> EnvironmentPoints:
    """Concatenate point sets in order; weights carry over.

    The grid binding survives only when every input is bound to the same
    box, otherwise the merged set has none.
    """
    sets = list(sets)
    if not sets:
        return EnvironmentPoints(np.zeros((0, 3)))
    points = np.concatenate([s.points for s in sets])
    weights = np.concatenate([s.weights for s in sets])
    grid = None
    if all(s.grid is not None for s in sets):
        box = sets[0].grid.box
        if all(s.grid.box == box for s in sets):
            grid = GridBinding(box, np.concatenate([s.grid.voxel_indices for s in sets]))
    return EnvironmentPoints(points, weights, grid)


def save_points(points: EnvironmentPoints, path) -> None:
    """Write points to the binary interchange format (positions as float32)."""
    uniform = bool(np.all(points.weights == 1.0))
    with open(path, "wb") as fh:
        fh.write(_POINTS_MAGIC)
        fh.write(struct.pack("<QB", len(points), 0 if uniform else 1))
        fh.write(points.points.astype("<f4").tobytes())
        if not uniform:
            fh.write(points.weights.astype("<f4").tobytes())


def load_points(path) -> EnvironmentPoints:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != _POINTS_MAGIC:
        raise ValueError(f"{path}: not a point-set file (bad magic)")
    count, has_weights = struct.unpack_from("<QB", data, 4)
    off = 4 + 9
    need = off + 12 * count + (4 * count if has_weights else 0)
    if len(data) < need:
        raise ValueError(f"{path}: truncated point-set file")
    pts = np.frombuffer(data, "<f4", 3 * count, off).reshape(-1, 3).astype(np.float64)
    weights = None
    if has_weights:
        weights = np.frombuffer(data, "<f4", count, off + 12 * count).astype(np.float64)
    return EnvironmentPoints(pts, weights)
