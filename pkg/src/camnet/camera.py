"""Camera models: intrinsics, poses, and point projection.

Conventions used throughout the package:

* Quaternions are scalar-first ``(w, x, y, z)`` and unit length.
* A camera looks along its local ``-z`` axis with ``+y`` up and ``+x``
  right; depth is the distance along the viewing axis, not euclidean.
* Image coordinates have ``u`` growing right and ``v`` growing down, with
  the image center at ``(width/2, height/2)``. A point on the horizontal
  field-of-view border projects to ``u = 0`` or ``u = width`` exactly.
* The vertical field of view follows from the horizontal one through the
  aspect ratio, so a ``width x height`` image spans
  ``perspective_angle * height / width`` vertically in tangent space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CameraSpec:
    """Intrinsics shared by every placement of one camera model.

    ``perspective_angle`` is the full horizontal field of view in degrees,
    ``resolution`` is ``(width, height)`` in pixels, and the range bounds
    are in meters along the viewing axis.
    """

    perspective_angle: float = 90.0
    resolution: tuple[int, int] = (640, 400)
    min_range: float = 0.1
    max_range: float = 100.0

    def __post_init__(self):
        w, h = self.resolution
        if not (0.0 < self.perspective_angle < 180.0):
            raise ValueError("perspective_angle must be in (0, 180) degrees")
        if w < 1 or h < 1:
            raise ValueError("resolution must be at least 1x1")
        if not (0.0 < self.min_range < self.max_range):
            raise ValueError("need 0 < min_range < max_range")
        object.__setattr__(self, "resolution", (int(w), int(h)))

    @property
    def width(self) -> int:
        return self.resolution[0]

    @property
    def height(self) -> int:
        return self.resolution[1]

    @property
    def tan_half_h(self) -> float:
        return math.tan(math.radians(self.perspective_angle) / 2.0)

    @property
    def tan_half_v(self) -> float:
        return self.tan_half_h * self.height / self.width

    @property
    def focal_px(self) -> float:
        """Focal length in pixels, identical for u and v."""
        return (self.width / 2.0) / self.tan_half_h

    @property
    def principal_point(self) -> tuple[float, float]:
        return (self.width / 2.0, self.height / 2.0)


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, np.float64).reshape(4)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("zero-norm quaternion")
    return q / n


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit scalar-first quaternion.

    Columns are the camera's local x, y, z axes expressed in world frame.
    """
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(m) -> np.ndarray:
    """Scalar-first unit quaternion of a rotation matrix (w >= 0)."""
    m = np.asarray(m, np.float64)
    t = np.trace(m)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


@dataclass(frozen=True)
class Pose:
    """Rigid placement: position in meters, orientation as a unit quaternion."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "position", np.asarray(self.position, np.float64).reshape(3)
        )
        object.__setattr__(self, "orientation", quat_normalize(self.orientation))

    @classmethod
    def look_at(cls, position, target, up=(0.0, 0.0, 1.0)) -> "Pose":
        """Pose at ``position`` viewing ``target``, roll fixed by ``up``."""
        position = np.asarray(position, np.float64).reshape(3)
        forward = np.asarray(target, np.float64).reshape(3) - position
        n = np.linalg.norm(forward)
        if n < 1e-12:
            raise ValueError("look_at target coincides with position")
        forward = forward / n
        up = np.asarray(up, np.float64).reshape(3)
        right = np.cross(forward, up)
        rn = np.linalg.norm(right)
        if rn < 1e-9:
            # Viewing direction parallel to up: fall back to world x for roll.
            alt = np.array([1.0, 0.0, 0.0])
            right = np.cross(forward, alt)
            rn = np.linalg.norm(right)
        right = right / rn
        cam_up = np.cross(right, forward)
        m = np.column_stack([right, cam_up, -forward])
        return cls(position, matrix_to_quat(m))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    @property
    def forward(self) -> np.ndarray:
        return -self.rotation_matrix()[:, 2]

    @property
    def right(self) -> np.ndarray:
        return self.rotation_matrix()[:, 0]

    @property
    def up(self) -> np.ndarray:
        return self.rotation_matrix()[:, 1]


@dataclass(frozen=True)
class Viewpoint:
    """One candidate or placed camera: intrinsics plus pose plus identity."""

    spec: CameraSpec
    pose: Pose
    id: int = -1


def camera_frame_points(pose: Pose, points: np.ndarray) -> np.ndarray:
    """World points expressed in the camera frame, (n, 3)."""
    points = np.asarray(points, np.float64).reshape(-1, 3)
    return (points - pose.position) @ pose.rotation_matrix()


def project_points(viewpoint: Viewpoint, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project world points into the image.

    Returns ``(uv, depth, valid)``: pixel coordinates (n, 2), axis-aligned
    depth in meters (n,), and a mask of points inside the viewing frustum
    (range bounds and field of view, borders inclusive). ``uv`` and
    ``depth`` are meaningful only where ``valid`` is set.
    """
    spec = viewpoint.spec
    cam = camera_frame_points(viewpoint.pose, points)
    depth = -cam[:, 2]
    # The field-of-view test runs on undivided camera coordinates with a
    # one-part-in-1e12 slack so points exactly on the border stay inside
    # despite the rounding of tan().
    slack = 1.0 + 1e-12
    valid = (
        (depth >= spec.min_range)
        & (depth <= spec.max_range)
        & (np.abs(cam[:, 0]) <= depth * (spec.tan_half_h * slack))
        & (np.abs(cam[:, 1]) <= depth * (spec.tan_half_v * slack))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        x = cam[:, 0] / depth
        y = cam[:, 1] / depth
    f = spec.focal_px
    cx, cy = spec.principal_point
    uv = np.column_stack([cx + f * x, cy - f * y])
    uv[~valid] = 0.0
    return uv, depth, valid


def project_point(viewpoint: Viewpoint, point) -> tuple[float, float, float] | None:
    """Pixel coordinates and depth of one world point, or None outside the frustum."""
    uv, depth, valid = project_points(viewpoint, np.asarray(point, np.float64).reshape(1, 3))
    if not valid[0]:
        return None
    return (float(uv[0, 0]), float(uv[0, 1]), float(depth[0]))


def frustum_contains(viewpoint: Viewpoint, point) -> bool:
    return project_point(viewpoint, point) is not None


def frustum_contains_batch(viewpoint: Viewpoint, points) -> np.ndarray:
    return project_points(viewpoint, points)[2]
