"""Shared fixtures.

The harbour scene, its candidate set, and its visibility matrix are
expensive to build (hundreds of depth renders), so they are constructed
once per session and shared read-only across test modules.
"""
from __future__ import annotations

import numpy as np
import pytest

from camnet import (
    CameraSpec,
    EnvironmentPoints,
    RoiBox,
    build_visibility_matrix,
    bundled_scene,
    make_harbour_candidates,
    voxelize_box,
)

# Smaller sensor than the shipping default keeps the 600-render matrix
# build around a couple of seconds without changing any semantics.
HARBOUR_TEST_SPEC = CameraSpec(
    perspective_angle=90.0, resolution=(320, 200), min_range=0.5, max_range=80.0
)


@pytest.fixture(scope="session")
def harbour_mesh():
    return bundled_scene("harbour")


@pytest.fixture(scope="session")
def harbour_candidates(harbour_mesh):
    cands = make_harbour_candidates(spec=HARBOUR_TEST_SPEC)
    assert len(cands) == 600
    return cands


@pytest.fixture(scope="session")
def harbour_points():
    roi = RoiBox(center=(0.0, 0.0, 4.0), half_extents=(24.0, 14.0, 2.0), resolution=(64, 37, 5))
    pts = voxelize_box(roi)
    assert pts.n_points == 64 * 37 * 5
    return pts


@pytest.fixture(scope="session")
def harbour_matrix(harbour_mesh, harbour_points, harbour_candidates):
    return build_visibility_matrix(
        harbour_mesh, harbour_candidates, harbour_points, n_jobs=4
    )


@pytest.fixture(scope="session")
def terrain_mesh():
    mesh = bundled_scene("terrain_100k")
    assert mesh.n_triangles >= 100_000
    return mesh


def random_bit_matrix(rng: np.random.Generator, n: int, m: int, density: float):
    """Random boolean visibility pattern used by objective/optimizer tests."""
    from camnet import VisibilityMatrix

    mask = rng.random((n, m)) < density
    return VisibilityMatrix(np.asfortranarray(mask))


def random_points(rng: np.random.Generator, n: int, weighted: bool = False):
    pos = rng.uniform(-5.0, 5.0, size=(n, 3))
    w = rng.uniform(0.1, 2.0, size=n) if weighted else None
    return EnvironmentPoints(pos, weights=w)
