from __future__ import annotations

import numpy as np
import pytest

from camnet import (
    CameraSpec,
    Pose,
    Viewpoint,
    VisibilityMatrix,
    build_bvh,
    build_visibility_matrix,
    default_depth_bias,
    f_counts,
    make_cube,
    make_ground,
    render_depth,
    visible_points_raycast,
    visible_points_zbuffer,
)

SPEC = CameraSpec(perspective_angle=90.0, resolution=(64, 64), min_range=0.1, max_range=100.0)


def _facing_wall():
    """Camera 5 m in front of a 20x20 wall in the x-y plane."""
    wall = make_ground(20.0, 20.0, z=0.0)
    vp = Viewpoint(SPEC, Pose((0, 0, 5.0), (1, 0, 0, 0)))  # looking down -z
    return wall, vp


def test_render_depth_flat_wall_exact():
    wall, vp = _facing_wall()
    buf = render_depth(wall, vp)
    assert buf.depths.shape == (64, 64)
    # The wall fills the frustum at depth exactly 5; perspective-correct
    # interpolation of a constant-depth plane is exact.
    np.testing.assert_allclose(buf.depths, 5.0, atol=1e-5)


def test_render_depth_keeps_nearest_surface():
    wall, vp = _facing_wall()
    near_wall = make_ground(0.5, 0.5, z=3.0)  # small patch closer to the camera
    from camnet.scenes import _assemble

    both = _assemble([
        (wall.vertices, wall.triangles),
        (near_wall.vertices, near_wall.triangles),
    ])
    buf = render_depth(both, vp)
    h, w = buf.depths.shape
    assert buf.depths[h // 2, w // 2] == pytest.approx(2.0, abs=1e-5)
    assert buf.depths[0, 0] == pytest.approx(5.0, abs=1e-4)


def test_render_depth_empty_view_is_inf():
    wall, _ = _facing_wall()
    vp = Viewpoint(SPEC, Pose((0, 0, 5.0), Pose.look_at((0, 0, 5.0), (0, 0, 10.0)).orientation))
    buf = render_depth(wall, vp)
    assert np.all(np.isinf(buf.depths))


def test_render_depth_never_below_min_range():
    wall, _ = _facing_wall()
    vp = Viewpoint(SPEC, Pose((0, 0, SPEC.min_range), (1, 0, 0, 0)))
    buf = render_depth(wall, vp)
    finite = buf.depths[np.isfinite(buf.depths)]
    assert finite.size
    assert np.all(finite >= SPEC.min_range)


def test_zbuffer_visibility_open_view():
    wall, vp = _facing_wall()
    buf = render_depth(wall, vp)
    bias = default_depth_bias(wall, SPEC)
    pts = np.array([
        [0, 0, 1.0],    # in front of the wall, visible
        [0, 0, 0.0],    # on the wall surface, visible thanks to the bias
        [0, 0, -1.0],   # behind the wall, occluded
        [0, 0, 6.0],    # behind the camera
    ])
    vis = visible_points_zbuffer(buf, vp, pts, bias)
    assert vis.tolist() == [True, True, False, False]


def test_zbuffer_bias_controls_surface_points():
    wall, vp = _facing_wall()
    buf = render_depth(wall, vp)
    p = np.array([[0.0, 0.0, -0.5]])  # half a meter behind the surface
    assert not visible_points_zbuffer(buf, vp, p, bias=0.01)[0]
    assert visible_points_zbuffer(buf, vp, p, bias=1.0)[0]


def test_raycast_visibility_matches_geometry():
    wall, vp = _facing_wall()
    bvh = build_bvh(wall)
    pts = np.array([
        [0, 0, 1.0],
        [0, 0, 0.0],     # on the surface: not self-occluded
        [0, 0, -1.0],    # behind the wall
        [30, 0, 1.0],    # outside the frustum
    ])
    vis = visible_points_raycast(bvh, vp, pts)
    assert vis.tolist() == [True, True, False, False]


def test_methods_agree_on_box_scene():
    cube = make_cube(size=4.0, center=(0, 0, 0))
    spec = CameraSpec(perspective_angle=90.0, resolution=(640, 400), min_range=0.1, max_range=50.0)
    vp = Viewpoint(spec, Pose.look_at((10, 6, 8), (0, 0, 0)))
    rng = np.random.default_rng(12)
    pts = rng.uniform(-6, 10, size=(2000, 3))
    buf = render_depth(cube, vp)
    z = visible_points_zbuffer(buf, vp, pts, default_depth_bias(cube, spec))
    r = visible_points_raycast(build_bvh(cube), vp, pts)
    agree = np.mean(z == r)
    assert agree >= 0.99


def test_matrix_column_and_bounds():
    bits = np.zeros((5, 3), bool)
    bits[1, 2] = True
    m = VisibilityMatrix(bits)
    assert m.n_points == 5 and m.m_cameras == 3
    assert m.column(2)[1]
    with pytest.raises(IndexError):
        m.column(3)
    with pytest.raises(IndexError):
        m.column(-1)


def test_matrix_io_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    bits = rng.random((97, 13)) < 0.3  # odd sizes exercise bit padding
    m = VisibilityMatrix(bits)
    path = tmp_path / "m.vis"
    m.save(path)
    back = VisibilityMatrix.load(path)
    np.testing.assert_array_equal(back.bits, m.bits)
    assert path.stat().st_size == 16 + (97 * 13 + 7) // 8


def test_matrix_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.vis"
    path.write_bytes(b"VIS1" + b"\x00" * 20)
    with pytest.raises(ValueError):
        VisibilityMatrix.load(path)


def test_f_counts_and_validation():
    bits = np.array([
        [1, 0, 1],
        [0, 0, 1],
        [1, 1, 1],
    ], dtype=bool)
    m = VisibilityMatrix(bits)
    np.testing.assert_array_equal(f_counts(m, []), [0, 0, 0])
    np.testing.assert_array_equal(f_counts(m, [0, 2]), [2, 1, 2])
    assert f_counts(m, [1]).dtype == np.int32
    with pytest.raises(ValueError):
        f_counts(m, [0, 0])
    with pytest.raises(ValueError):
        f_counts(m, [3])


def test_build_matrix_thread_count_invariant(harbour_mesh, harbour_candidates, harbour_points):
    sub = list(harbour_candidates)[:12]
    a = build_visibility_matrix(harbour_mesh, sub, harbour_points, n_jobs=1)
    b = build_visibility_matrix(harbour_mesh, sub, harbour_points, n_jobs=4)
    np.testing.assert_array_equal(a.bits, b.bits)


def test_build_matrix_rejects_unknown_method(harbour_mesh, harbour_points):
    with pytest.raises(ValueError):
        build_visibility_matrix(harbour_mesh, [], harbour_points, method="magic")


def test_build_matrix_raycast_small(harbour_mesh, harbour_candidates, harbour_points):
    sub = list(harbour_candidates)[:3]
    zb = build_visibility_matrix(harbour_mesh, sub, harbour_points, method="zbuffer")
    rc = build_visibility_matrix(harbour_mesh, sub, harbour_points, method="raycast")
    assert zb.bits.shape == rc.bits.shape == (len(harbour_points), 3)
    agree = np.mean(zb.bits == rc.bits)
    assert agree >= 0.99
