from __future__ import annotations

import numpy as np
import pytest

from camnet import (
    CameraSpec,
    DesignSession,
    EnvironmentPoints,
    Pose,
    TransferFunction,
    Viewpoint,
    VolumeFrame,
    make_cube,
    sample_points_uniform,
    solution_viewpoints,
)

SPEC = CameraSpec(perspective_angle=90.0, resolution=(96, 64), min_range=0.2, max_range=60.0)


def _session(seed=0, n=400):
    scene = make_cube(size=6.0)
    pts = sample_points_uniform(scene.bounds(), n, rng_seed=seed)
    return DesignSession(scene, pts, name="t"), scene


def _ring_pose(i: int) -> Pose:
    ang = 2 * np.pi * (i % 16) / 16
    pos = (10 * np.cos(ang), 10 * np.sin(ang), 6.0)
    return Pose.look_at(pos, (0, 0, 0))


def test_add_move_remove_updates_counts_incrementally():
    session, _ = _session()
    assert session.revision == 0
    s1 = session.add_camera(SPEC, _ring_pose(0))
    assert s1.revision == 1
    assert s1.changed_points == int(session.counts().sum())
    s2 = session.add_camera(SPEC, _ring_pose(5))
    assert s2.revision == 2
    assert s2.camera_id == 1

    np.testing.assert_array_equal(session.counts(), session.recompute_counts_full())
    session.move_camera(0, _ring_pose(9))
    np.testing.assert_array_equal(session.counts(), session.recompute_counts_full())
    session.remove_camera(1)
    np.testing.assert_array_equal(session.counts(), session.recompute_counts_full())
    assert session.camera_ids() == [0]
    assert session.revision == 4


def test_camera_ids_never_reused():
    session, _ = _session()
    a = session.add_camera(SPEC, _ring_pose(0)).camera_id
    session.remove_camera(a)
    b = session.add_camera(SPEC, _ring_pose(1)).camera_id
    assert b != a
    assert b == a + 1


def test_unknown_camera_id_raises():
    session, _ = _session()
    with pytest.raises(KeyError):
        session.move_camera(3, _ring_pose(0))
    with pytest.raises(KeyError):
        session.remove_camera(3)
    with pytest.raises(KeyError):
        session.viewpoint(3)


def test_move_reports_symmetric_difference():
    session, _ = _session()
    cid = session.add_camera(SPEC, _ring_pose(0)).camera_id
    before = session.counts().copy()
    summary = session.move_camera(cid, _ring_pose(8))
    after = session.counts()
    assert summary.changed_points == int(np.count_nonzero(after - before))


def test_noop_move_changes_revision_not_counts():
    session, _ = _session()
    cid = session.add_camera(SPEC, _ring_pose(0)).camera_id
    before = session.counts().copy()
    summary = session.move_camera(cid, _ring_pose(0))
    assert summary.changed_points == 0
    assert session.revision == 2
    np.testing.assert_array_equal(session.counts(), before)


def test_coverage_is_weighted():
    scene = make_cube(size=6.0)
    pts = EnvironmentPoints(
        [[0, 0, 4.0], [0, 0, -100.0]], weights=[3.0, 1.0]
    )
    session = DesignSession(scene, pts)
    session.add_camera(SPEC, Pose.look_at((0, 0, 8.0), (0, 0, 4.0)))
    # Only the first (weight 3) point is inside any frustum.
    assert session.coverage() == pytest.approx(3.0 / 4.0)


def test_volume_frame_roundtrip_counts():
    session, _ = _session()
    session.add_camera(SPEC, _ring_pose(0))
    frame = session.get_volume()
    assert frame.encoding == 0
    assert frame.revision == 1
    back = VolumeFrame.from_bytes(frame.to_bytes())
    assert back.revision == frame.revision
    assert back.n_points == frame.n_points
    np.testing.assert_array_equal(back.counts, frame.counts)


def test_volume_frame_roundtrip_mask():
    session, _ = _session()
    session.add_camera(SPEC, _ring_pose(0))
    frame = session.get_volume(mode="uncovered_only")
    assert frame.encoding == 1
    np.testing.assert_array_equal(frame.mask, session.counts() == 0)
    back = VolumeFrame.from_bytes(frame.to_bytes())
    np.testing.assert_array_equal(back.mask, frame.mask)
    with pytest.raises(ValueError):
        VolumeFrame.from_bytes(b"\x00" * 8 + b"\x01\x00\x00\x00" + b"\x07")


def test_transfer_function_validation():
    TransferFunction("uncovered_only")
    TransferFunction(stops=((0.0, (0, 0, 0, 1)), (1.0, (1, 0, 0, 1))))
    with pytest.raises(ValueError):
        TransferFunction("heatmap")
    with pytest.raises(ValueError):
        TransferFunction(stops=((0.5, (0, 0, 0, 1)), (0.2, (0, 0, 0, 1))))
    with pytest.raises(ValueError):
        TransferFunction(stops=((0.5, (0, 0, 0)),))
    with pytest.raises(ValueError):
        TransferFunction(stops=((1.5, (0, 0, 0, 1)),))
    session, _ = _session()
    session.set_transfer(TransferFunction("uncovered_only"))
    assert session.get_volume().encoding == 1


def test_export_solution_roundtrip():
    session, scene = _session()
    session.add_camera(SPEC, _ring_pose(0))
    session.add_camera(SPEC, _ring_pose(4))
    doc = session.export_solution()
    assert doc["format"] == "camnet-solution"
    assert doc["revision"] == 2
    assert doc["coverage"] == pytest.approx(session.coverage())
    views = solution_viewpoints(doc)
    assert [v.id for v in views] == [0, 1]
    # Rebuilding a session from the export reproduces the counts.
    rebuilt = DesignSession(scene, session.points, cameras=views)
    np.testing.assert_array_equal(rebuilt.counts(), session.counts())
    with pytest.raises(ValueError):
        solution_viewpoints({"format": "other"})


def test_initial_cameras_and_latency():
    scene = make_cube(size=6.0)
    pts = sample_points_uniform(scene.bounds(), 100, rng_seed=1)
    cams = [Viewpoint(SPEC, _ring_pose(i)) for i in range(3)]
    session = DesignSession(scene, pts, cameras=cams)
    assert session.camera_ids() == [0, 1, 2]
    assert session.revision == 3
    assert session.latency.count == 3
    assert session.latency.mean_ms > 0
    d = session.latency.to_dict()
    assert d["count"] == 3 and d["max_ms"] >= d["mean_ms"]


def test_raycast_session_matches_its_own_oracle():
    scene = make_cube(size=6.0)
    pts = sample_points_uniform(scene.bounds(), 200, rng_seed=2)
    session = DesignSession(scene, pts, method="raycast")
    session.add_camera(SPEC, _ring_pose(0))
    session.move_camera(0, _ring_pose(3))
    np.testing.assert_array_equal(session.counts(), session.recompute_counts_full())


def test_random_mutation_stream_stays_coherent():
    rng = np.random.default_rng(77)
    session, _ = _session(n=250)
    live: list[int] = []
    for step in range(120):
        op = rng.choice(["add", "move", "remove"])
        if op == "add" or not live:
            cid = session.add_camera(SPEC, _ring_pose(int(rng.integers(16)))).camera_id
            live.append(cid)
        elif op == "move":
            session.move_camera(int(rng.choice(live)), _ring_pose(int(rng.integers(16))))
        else:
            cid = int(rng.choice(live))
            session.remove_camera(cid)
            live.remove(cid)
        assert session.revision == step + 1
    np.testing.assert_array_equal(session.counts(), session.recompute_counts_full())
    assert sorted(live) == session.camera_ids()
