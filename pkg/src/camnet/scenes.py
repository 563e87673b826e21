"""Procedurally built demonstration scenes.

Everything here is deterministic: repeated calls with the same arguments
return identical meshes, so tests and benchmarks can rely on exact
geometry without shipping mesh files.
"""

from __future__ import annotations

import math

import numpy as np

from .camera import CameraSpec, Pose, Viewpoint
from .discretize import CandidateSet, sample_segment_viewpoints
from .geometry import TriangleMesh

_BOX_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # bottom (z-)
        [4, 5, 6], [4, 6, 7],  # top (z+)
        [0, 1, 5], [0, 5, 4],  # y-
        [2, 3, 7], [2, 7, 6],  # y+
        [1, 2, 6], [1, 6, 5],  # x+
        [3, 0, 4], [3, 4, 7],  # x-
    ],
    np.int32,
)


def _box(center, size) -> tuple[np.ndarray, np.ndarray]:
    cx, cy, cz = center
    hx, hy, hz = size[0] / 2.0, size[1] / 2.0, size[2] / 2.0
    verts = np.array(
        [
            [cx - hx, cy - hy, cz - hz],
            [cx + hx, cy - hy, cz - hz],
            [cx + hx, cy + hy, cz - hz],
            [cx - hx, cy + hy, cz - hz],
            [cx - hx, cy - hy, cz + hz],
            [cx + hx, cy - hy, cz + hz],
            [cx + hx, cy + hy, cz + hz],
            [cx - hx, cy + hy, cz + hz],
        ]
    )
    return verts, _BOX_FACES


def _assemble(parts) -> TriangleMesh:
    verts = []
    tris = []
    base = 0
    for v, t in parts:
        verts.append(v)
        tris.append(t + base)
        base += len(v)
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris))


def make_cube(size: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned cube, 12 triangles."""
    return _assemble([_box(center, (size, size, size))])


def make_ground(size_x: float, size_y: float, z: float = 0.0,
                center=(0.0, 0.0)) -> TriangleMesh:
    cx, cy = center
    hx, hy = size_x / 2.0, size_y / 2.0
    verts = np.array(
        [[cx - hx, cy - hy, z], [cx + hx, cy - hy, z],
         [cx + hx, cy + hy, z], [cx - hx, cy + hy, z]]
    )
    tris = np.array([[0, 1, 2], [0, 2, 3]], np.int32)
    return TriangleMesh(verts, tris)


def make_harbour_scene() -> TriangleMesh:
    """Container yard: flat ground with rows of stacked container boxes.

    Six rows of eight stacks with fixed heights between one and three
    containers, separated by driving aisles.
    """
    parts = [
        (np.array([[-50.0, -30.0, 0.0], [50.0, -30.0, 0.0],
                   [50.0, 30.0, 0.0], [-50.0, 30.0, 0.0]]),
         np.array([[0, 1, 2], [0, 2, 3]], np.int32)),
    ]
    c_len, c_wid, c_hgt = 6.0, 2.4, 2.6
    for row in range(6):
        y = -25.0 + row * 10.0
        for col in range(8):
            x = -42.0 + col * 12.0
            stack = (row * 7 + col * 3) % 3 + 1
            for level in range(stack):
                parts.append(
                    _box((x, y, c_hgt * (level + 0.5)), (c_len, c_wid, c_hgt))
                )
    return _assemble(parts)


def harbour_candidate_segments() -> np.ndarray:
    """Two elevated mounting rails running the length of the yard."""
    return np.array(
        [
            [[-45.0, -10.0, 12.0], [45.0, -10.0, 12.0]],
            [[-45.0, 10.0, 12.0], [45.0, 10.0, 12.0]],
        ]
    )


def harbour_orientations(n_yaw: int = 5, pitches_deg=(-35.0, -55.0, -75.0)) -> list:
    """Downward-looking orientation grid: ``n_yaw`` headings times the given
    pitch angles (15 by default)."""
    quats = []
    for pitch in pitches_deg:
        for i in range(n_yaw):
            yaw = 2.0 * math.pi * i / n_yaw
            p = math.radians(pitch)
            d = np.array(
                [math.cos(p) * math.cos(yaw), math.cos(p) * math.sin(yaw), math.sin(p)]
            )
            quats.append(Pose.look_at((0.0, 0.0, 0.0), d).orientation)
    return quats


def make_harbour_candidates(
    spec: CameraSpec | None = None, positions_per_segment: int = 20
) -> CandidateSet:
    """Default harbour candidate grid: 2 rails x 20 stops x 15 orientations."""
    if spec is None:
        spec = CameraSpec(90.0, (640, 400), 0.5, 80.0)
    return sample_segment_viewpoints(
        harbour_candidate_segments(), positions_per_segment, harbour_orientations(), spec
    )


def make_office_scene() -> TriangleMesh:
    """Single-storey 40 x 40 x 3 m interior: floor, perimeter walls, and a
    grid of partition walls with door gaps."""
    w = 0.2
    parts = [
        (np.array([[0.0, 0.0, 0.0], [40.0, 0.0, 0.0],
                   [40.0, 40.0, 0.0], [0.0, 40.0, 0.0]]),
         np.array([[0, 1, 2], [0, 2, 3]], np.int32)),
        _box((20.0, w / 2, 1.5), (40.0, w, 3.0)),
        _box((20.0, 40.0 - w / 2, 1.5), (40.0, w, 3.0)),
        _box((w / 2, 20.0, 1.5), (w, 40.0, 3.0)),
        _box((40.0 - w / 2, 20.0, 1.5), (w, 40.0, 3.0)),
    ]
    # Partition rows with 1.2 m door gaps, alternating gap ends.
    for i, y in enumerate((10.0, 20.0, 30.0)):
        if i % 2 == 0:
            parts.append(_box((10.0 - 0.6, y, 1.5), (18.8, w, 3.0)))
            parts.append(_box((30.0 + 0.6, y, 1.5), (18.8, w, 3.0)))
        else:
            parts.append(_box((20.0, y, 1.5), (28.0, w, 3.0)))
    for x in (13.0, 27.0):
        parts.append(_box((x, 15.0, 1.5), (w, 9.0, 3.0)))
        parts.append(_box((x, 25.0 + 2.5, 1.5), (w, 9.0, 3.0)))
    return _assemble(parts)


def make_terrain_scene(grid: int = 230, extent: float = 100.0, seed: int = 7,
                       amplitude: float = 6.0) -> TriangleMesh:
    """Rolling heightfield of ``2 * (grid - 1)^2`` triangles.

    ``grid=230`` crosses one hundred thousand triangles, ``grid=516`` gives
    roughly half a million; both build identically for a fixed seed.
    """
    if grid < 2:
        raise ValueError("grid must be >= 2")
    rng = np.random.default_rng(seed)
    xs = np.linspace(-extent / 2, extent / 2, grid)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    z = np.zeros_like(gx)
    for _ in range(6):
        fx, fy = rng.uniform(0.02, 0.12, 2)
        phase = rng.uniform(0, 2 * np.pi, 2)
        amp = rng.uniform(0.2, 1.0)
        z += amp * np.sin(2 * np.pi * fx * gx + phase[0]) * np.cos(
            2 * np.pi * fy * gy + phase[1]
        )
    z *= amplitude / max(np.abs(z).max(), 1e-9)
    verts = np.column_stack([gx.ravel(), gy.ravel(), z.ravel()])
    idx = np.arange(grid * grid).reshape(grid, grid)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    tris = np.concatenate(
        [np.column_stack([a, b, c]), np.column_stack([a, c, d])]
    ).astype(np.int32)
    return TriangleMesh(verts, tris)


_BUILTIN = {
    "cube": make_cube,
    "harbour": make_harbour_scene,
    "office": make_office_scene,
    "terrain_100k": lambda: make_terrain_scene(230),
    "terrain_530k": lambda: make_terrain_scene(516),
}


def bundled_scene(name: str) -> TriangleMesh:
    """Look up a built-in scene by name; see ``bundled_scene_names``."""
    try:
        factory = _BUILTIN[name]
    except KeyError:
        raise ValueError(
            f"unknown bundled scene {name!r}; available: {sorted(_BUILTIN)}"
        ) from None
    return factory()


def bundled_scene_names() -> list[str]:
    return sorted(_BUILTIN)
