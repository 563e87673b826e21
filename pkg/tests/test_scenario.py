from __future__ import annotations

import numpy as np
import pytest
import yaml

from camnet import Scenario, load_scenario, parse_config


def _doc(**overrides) -> dict:
    doc = {
        "scene": {"builtin": "cube"},
        "camera": {
            "perspective_angle": 90.0,
            "resolution": [96, 64],
            "min_range": 0.2,
            "max_range": 60.0,
        },
        "roi_boxes": [
            {
                "center": [0, 0, 1.5],
                "half_extents": [0.75, 0.75, 0.4],
                "resolution": [4, 4, 4],
            }
        ],
        "points": [{"kind": "roi_voxels", "box": 0}],
        "candidates": {
            "kind": "segments",
            "segments": [[[-3, -3, 3], [3, -3, 3]], [[-3, 3, 3], [3, 3, 3]]],
            "positions_per_segment": 4,
        },
        "optimizer": {"method": "lazy_greedy", "k": 3},
    }
    doc.update(overrides)
    return doc


def _scenario(**overrides) -> Scenario:
    return Scenario.from_config(parse_config(_doc(**overrides)))


def test_build_from_config():
    s = _scenario()
    assert s.mesh.n_triangles == 12
    assert len(s.points) == 64
    # 2 segments x 4 positions x 15 preset orientations.
    assert len(s.candidates) == 120
    assert s.quality.kind == "scp"
    assert s.regularizer is None


def test_points_require_valid_box_index():
    with pytest.raises(ValueError) as exc:
        _scenario(points=[{"kind": "roi_voxels", "box": 3}])
    assert "box" in str(exc.value)


def test_points_sources_merge():
    s = _scenario(
        points=[
            {"kind": "roi_voxels", "box": 0},
            {"kind": "uniform_box", "min": [-1, -1, -1], "max": [1, 1, 1], "count": 10},
        ]
    )
    assert len(s.points) == 74


def test_no_points_configured():
    with pytest.raises(ValueError):
        _scenario(points=[])


def test_optimize_dispatch_methods():
    s = _scenario()
    matrix = s.build_matrix()
    lazy = s.optimize(matrix)
    plain = s.optimize(matrix, method="greedy")
    assert lazy.method == "lazy_greedy"
    assert lazy.solution.ids == plain.solution.ids
    exact = s.optimize(matrix, method="brute_force", k=2)
    approx = s.optimize(matrix, method="greedy", k=2)
    assert exact.value >= approx.value - 1e-12
    rand = s.optimize(matrix, method="random", seed=5)
    assert len(rand.solution.ids) == 3
    with pytest.raises(ValueError):
        s.optimize(matrix, method="psychic")


def test_regularized_lazy_falls_back_to_greedy():
    s = _scenario(
        regularizer={"kind": "proximity", "alpha": 0.5, "min_separation": 4.0}
    )
    assert s.regularizer is not None and s.regularizer.active
    matrix = s.build_matrix()
    rep = s.optimize(matrix)  # configured lazy_greedy
    assert rep.method == "greedy"


def test_quality_variants_built():
    assert _scenario(quality={"kind": "threshold_count", "cap": 2}).quality.kind == "threshold_count"
    assert _scenario(quality={"kind": "redundancy", "seed": 4}).quality.kind == "redundancy"
    s = _scenario(quality={"kind": "redundancy", "weights": [0.7, 0.3]})
    np.testing.assert_allclose(s.quality.table, [0.0, 0.7, 1.0])
    s = _scenario(quality={"kind": "custom_table", "values": [0.0, 2.0, 3.0]})
    np.testing.assert_allclose(s.quality.table, [0.0, 2.0, 3.0])


def test_make_session_with_initial_cameras():
    s = _scenario(
        session={
            "name": "demo",
            "initial_cameras": [
                {"position": [0, 0, 5], "look_at": [0, 0, 0]},
                {"position": [5, 0, 0], "quaternion": [1, 0, 0, 0]},
            ],
        }
    )
    session = s.make_session()
    assert session.name == "demo"
    assert session.camera_ids() == [0, 1]
    assert session.revision == 2
    np.testing.assert_array_equal(session.counts(), session.recompute_counts_full())


def test_load_scenario_resolves_relative_files(tmp_path):
    from camnet import EnvironmentPoints, save_points

    pts = EnvironmentPoints(np.random.default_rng(0).uniform(-0.4, 0.4, (20, 3)))
    save_points(pts, tmp_path / "pts.bin")
    doc = _doc(points=[{"kind": "file", "path": "pts.bin"}])
    cfg_path = tmp_path / "scenario.yaml"
    cfg_path.write_text(yaml.safe_dump(doc))
    s = load_scenario(cfg_path)
    assert len(s.points) == 20
    assert s.base_dir == tmp_path


def test_candidates_area_kind():
    s = _scenario(
        candidates={
            "kind": "area",
            "polygon": [[-3, -3], [3, -3], [3, 3], [-3, 3]],
            "height": 3.0,
            "count": 25,
            "seed": 2,
        }
    )
    assert len(s.candidates) == 25
    assert s.build_matrix().m_cameras == 25
