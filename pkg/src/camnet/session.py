"""Live design session: a camera network edited in place with immediate
per-point feedback.

Mutations (move, add, remove) recompute only the touched camera's
visibility column and patch the committed per-point counts incrementally;
a revision counter advances with every commit. Readers always get a
consistent (revision, counts) pair: commits swap whole arrays under a lock
and never write into an array a reader may hold.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from threading import Lock

import numpy as np

from .camera import CameraSpec, Pose, Viewpoint
from .discretize import EnvironmentPoints
from .geometry import Bvh, TriangleMesh
from .visibility import (
    default_depth_bias,
    render_depth,
    visible_points_raycast,
    visible_points_zbuffer,
)

VOLUME_COUNTS = 0
VOLUME_MASK = 1

_MODES = ("quality", "uncovered_only", "custom")


@dataclass(frozen=True)
class UpdateSummary:
    """Receipt of one committed mutation."""

    revision: int
    camera_id: int
    changed_points: int
    duration_ms: float


class LatencyStats:
    """Running latency record of committed mutations, in milliseconds."""

    def __init__(self):
        self.samples_ms: list[float] = []

    def record(self, ms: float) -> None:
        self.samples_ms.append(float(ms))

    @property
    def count(self) -> int:
        return len(self.samples_ms)

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.samples_ms)) if self.samples_ms else 0.0

    @property
    def max_ms(self) -> float:
        return float(np.max(self.samples_ms)) if self.samples_ms else 0.0

    def to_dict(self) -> dict:
        return {"count": self.count, "mean_ms": self.mean_ms, "max_ms": self.max_ms}


@dataclass(frozen=True)
class TransferFunction:
    """How a client should color counts; carried by the session so every
    attached view renders alike. ``stops`` map a normalized count to RGBA."""

    mode: str = "quality"
    stops: tuple = ()

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        prev = -1.0
        for stop in self.stops:
            value, rgba = stop
            if not 0.0 <= value <= 1.0:
                raise ValueError("transfer stop values must be in [0, 1]")
            if value < prev:
                raise ValueError("transfer stops must be sorted by value")
            if len(rgba) != 4:
                raise ValueError("transfer stop colors must be RGBA")
            prev = value

    def to_dict(self) -> dict:
        return {"mode": self.mode, "stops": [[v, list(rgba)] for v, rgba in self.stops]}


@dataclass(frozen=True)
class VolumeFrame:
    """Snapshot of per-point feedback at one revision.

    ``encoding`` 0 carries saturating uint16 counts, encoding 1 a packed
    uncovered bitmask (bit set = point not covered).
    """

    revision: int
    n_points: int
    encoding: int
    counts: np.ndarray | None = None
    mask: np.ndarray | None = None

    def to_bytes(self) -> bytes:
        head = struct.pack("<QIB", self.revision, self.n_points, self.encoding)
        if self.encoding == VOLUME_COUNTS:
            payload = np.minimum(self.counts, 65535).astype("<u2").tobytes()
        else:
            payload = np.packbits(self.mask, bitorder="little").tobytes()
        return head + payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "VolumeFrame":
        revision, n, enc = struct.unpack_from("<QIB", data, 0)
        body = data[13:]
        if enc == VOLUME_COUNTS:
            counts = np.frombuffer(body, "<u2", n).astype(np.int32)
            return cls(revision, n, enc, counts=counts)
        if enc == VOLUME_MASK:
            mask = np.unpackbits(
                np.frombuffer(body, np.uint8, (n + 7) // 8),
                count=n, bitorder="little",
            ).astype(bool)
            return cls(revision, n, enc, mask=mask)
        raise ValueError(f"unknown volume encoding {enc}")


class DesignSession:
    """Mutable camera network over a fixed scene and point set.

    One writer at a time: mutations are externally serialized (the server
    funnels them through a queue). Reads may come from any thread.
    """

    def __init__(
        self,
        mesh: TriangleMesh,
        points: EnvironmentPoints,
        cameras=(),
        method: str = "zbuffer",
        bias: float | None = None,
        name: str = "session",
    ):
        if method not in ("zbuffer", "raycast"):
            raise ValueError(f"unknown visibility method {method!r}")
        self.mesh = mesh
        self.points = points
        self.method = method
        self.name = name
        self._bounds = mesh.bounds()
        self._bias = bias
        self._bvh = Bvh(mesh) if method == "raycast" else None
        self._lock = Lock()
        self._columns: dict[int, np.ndarray] = {}
        self._specs: dict[int, CameraSpec] = {}
        self._poses: dict[int, Pose] = {}
        self._revision = 0
        self._next_id = 0
        self.latency = LatencyStats()
        self.transfer = TransferFunction()
        self._counts = np.zeros(len(points), np.int32)
        for cam in cameras:
            spec, pose = (cam.spec, cam.pose) if isinstance(cam, Viewpoint) else cam
            self.add_camera(spec, pose)

    # ------------------------------------------------------------- reads

    @property
    def revision(self) -> int:
        return self._revision

    def camera_ids(self) -> list[int]:
        with self._lock:
            return sorted(self._specs)

    def viewpoint(self, camera_id: int) -> Viewpoint:
        with self._lock:
            self._require(camera_id)
            return Viewpoint(self._specs[camera_id], self._poses[camera_id], camera_id)

    def viewpoints(self) -> list[Viewpoint]:
        with self._lock:
            return [
                Viewpoint(self._specs[i], self._poses[i], i) for i in sorted(self._specs)
            ]

    def counts(self) -> np.ndarray:
        with self._lock:
            return self._counts

    def coverage(self) -> float:
        with self._lock:
            counts = self._counts
        w = self.points.weights
        return float(w[counts >= 1].sum() / w.sum())

    def get_volume(self, mode: str | None = None) -> VolumeFrame:
        """Consistent snapshot for display; never blocks on recompute."""
        with self._lock:
            revision = self._revision
            counts = self._counts
        mode = mode or self.transfer.mode
        if mode == "uncovered_only":
            return VolumeFrame(
                revision, len(counts), VOLUME_MASK, mask=(counts == 0)
            )
        return VolumeFrame(revision, len(counts), VOLUME_COUNTS, counts=counts)

    def latency_stats(self) -> LatencyStats:
        return self.latency

    # --------------------------------------------------------- mutations

    def add_camera(self, spec: CameraSpec, pose: Pose) -> UpdateSummary:
        """Insert a camera; its id is new, never a reused one."""
        t0 = time.perf_counter()
        column = self._compute_column(spec, pose)
        with self._lock:
            camera_id = self._next_id
            self._next_id += 1
            self._specs[camera_id] = spec
            self._poses[camera_id] = pose
            self._columns[camera_id] = column
            self._counts = self._counts + column.astype(np.int32)
            self._revision += 1
            summary = UpdateSummary(
                self._revision, camera_id, int(column.sum()),
                (time.perf_counter() - t0) * 1e3,
            )
        self.latency.record(summary.duration_ms)
        return summary

    def move_camera(self, camera_id: int, pose: Pose) -> UpdateSummary:
        """Re-place one camera; only its column is recomputed."""
        t0 = time.perf_counter()
        with self._lock:
            self._require(camera_id)
            spec = self._specs[camera_id]
        column = self._compute_column(spec, pose)
        with self._lock:
            self._require(camera_id)
            old = self._columns[camera_id]
            delta = column.astype(np.int32) - old.astype(np.int32)
            changed = int(np.count_nonzero(delta))
            self._counts = self._counts + delta
            self._columns[camera_id] = column
            self._poses[camera_id] = pose
            self._revision += 1
            summary = UpdateSummary(
                self._revision, camera_id, changed, (time.perf_counter() - t0) * 1e3
            )
        self.latency.record(summary.duration_ms)
        return summary

    def remove_camera(self, camera_id: int) -> UpdateSummary:
        t0 = time.perf_counter()
        with self._lock:
            self._require(camera_id)
            old = self._columns.pop(camera_id)
            del self._specs[camera_id]
            del self._poses[camera_id]
            self._counts = self._counts - old.astype(np.int32)
            self._revision += 1
            summary = UpdateSummary(
                self._revision, camera_id, int(old.sum()),
                (time.perf_counter() - t0) * 1e3,
            )
        self.latency.record(summary.duration_ms)
        return summary

    def set_transfer(self, transfer: TransferFunction) -> None:
        self.transfer = transfer

    # ------------------------------------------------------------ export

    def export_solution(self) -> dict:
        """Portable snapshot of the current network."""
        with self._lock:
            revision = self._revision
            views = [
                Viewpoint(self._specs[i], self._poses[i], i) for i in sorted(self._specs)
            ]
        return {
            "format": "camnet-solution",
            "version": 1,
            "session": self.name,
            "revision": revision,
            "coverage": self.coverage(),
            "cameras": [
                {
                    "id": vp.id,
                    "spec": {
                        "perspective_angle": vp.spec.perspective_angle,
                        "resolution": list(vp.spec.resolution),
                        "min_range": vp.spec.min_range,
                        "max_range": vp.spec.max_range,
                    },
                    "pose": {
                        "position": vp.pose.position.tolist(),
                        "quaternion": vp.pose.orientation.tolist(),
                    },
                }
                for vp in views
            ],
        }

    # ---------------------------------------------------------- internal

    def recompute_counts_full(self) -> np.ndarray:
        """Counts from scratch for every current camera; the oracle the
        incremental bookkeeping is checked against."""
        views = self.viewpoints()
        counts = np.zeros(len(self.points), np.int32)
        for vp in views:
            counts += self._compute_column(vp.spec, vp.pose).astype(np.int32)
        return counts

    def _require(self, camera_id: int) -> None:
        if camera_id not in self._specs:
            raise KeyError(f"no camera with id {camera_id}")

    def _compute_column(self, spec: CameraSpec, pose: Pose) -> np.ndarray:
        vp = Viewpoint(spec, pose)
        if self.method == "raycast":
            return visible_points_raycast(self._bvh, vp, self.points.points)
        bias = self._bias
        if bias is None:
            bias = default_depth_bias(self._bounds, spec)
        buf = render_depth(self.mesh, vp)
        return visible_points_zbuffer(buf, vp, self.points.points, bias)


def solution_viewpoints(doc: dict) -> list[Viewpoint]:
    """Viewpoints from an exported solution record."""
    if doc.get("format") != "camnet-solution":
        raise ValueError("not a solution record (missing format tag)")
    views = []
    for cam in doc["cameras"]:
        spec = CameraSpec(
            cam["spec"]["perspective_angle"],
            tuple(cam["spec"]["resolution"]),
            cam["spec"]["min_range"],
            cam["spec"]["max_range"],
        )
        pose = Pose(cam["pose"]["position"], cam["pose"]["quaternion"])
        views.append(Viewpoint(spec, pose, int(cam["id"])))
    return views
