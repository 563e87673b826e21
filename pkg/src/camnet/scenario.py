"""Materialize a scenario configuration into working objects."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import CameraSpec, Pose, Viewpoint
from .config import (
    AreaCandidates,
    FilePoints,
    HarbourDefaultCandidates,
    RoiVoxelPoints,
    ScenarioConfig,
    SegmentCandidates,
    UniformBoxPoints,
)
from .discretize import (
    CandidateSet,
    EnvironmentPoints,
    RoiBox,
    load_points,
    merge_point_sets,
    sample_area_viewpoints,
    sample_points_uniform,
    sample_segment_viewpoints,
    voxelize_box,
)
from .geometry import Aabb, TriangleMesh, load_mesh
from .objective import (
    QualityFunction,
    QualityWeights,
    Regularizer,
    regularized_objective,
    sample_quality_weights,
)
from .optimize import OptimizerReport, brute_force, greedy, lazy_greedy, random_solution
from .scenes import bundled_scene, harbour_candidate_segments, harbour_orientations
from .session import DesignSession
from .visibility import VisibilityMatrix, build_visibility_matrix


def camera_spec_from_config(cfg) -> CameraSpec:
    return CameraSpec(
        cfg.perspective_angle, tuple(cfg.resolution), cfg.min_range, cfg.max_range
    )


@dataclass
class Scenario:
    """A fully built problem instance: everything the optimizer and the
    session need, derived deterministically from one configuration."""

    config: ScenarioConfig
    base_dir: Path
    mesh: TriangleMesh
    points: EnvironmentPoints
    candidates: CandidateSet | None
    quality: QualityFunction
    regularizer: Regularizer | None

    @classmethod
    def from_config(cls, config: ScenarioConfig, base_dir=".") -> "Scenario":
        base_dir = Path(base_dir)
        mesh = _build_mesh(config, base_dir)
        points = _build_points(config, base_dir, mesh)
        spec = camera_spec_from_config(config.camera)
        candidates = _build_candidates(config, spec)
        quality = build_quality(config.quality)
        regularizer = _build_regularizer(config, candidates)
        return cls(config, base_dir, mesh, points, candidates, quality, regularizer)

    def build_matrix(self, n_jobs: int | None = None) -> VisibilityMatrix:
        if self.candidates is None:
            raise ValueError("scenario has no candidate placements configured")
        vis = self.config.visibility
        return build_visibility_matrix(
            self.mesh,
            self.candidates,
            self.points,
            method=vis.method,
            bias=vis.depth_bias,
            n_jobs=vis.jobs if n_jobs is None else n_jobs,
        )

    def optimize(self, matrix: VisibilityMatrix, method: str | None = None,
                 k: int | None = None, seed: int | None = None) -> OptimizerReport:
        opt = self.config.optimizer
        method = method or opt.method
        k = opt.k if k is None else k
        seed = opt.seed if seed is None else seed
        if method == "greedy":
            return greedy(matrix, self.points, self.candidates, k, self.quality,
                          self.regularizer)
        if method == "lazy_greedy":
            reg = self.regularizer
            if reg is not None and reg.active:
                return greedy(matrix, self.points, self.candidates, k, self.quality, reg)
            return lazy_greedy(matrix, self.points, self.candidates, k, self.quality)
        if method == "brute_force":
            return brute_force(matrix, self.points, self.candidates, k, self.quality,
                               self.regularizer, budget=opt.budget)
        if method == "random":
            t0 = time.perf_counter()
            sol = random_solution(self.candidates, k, seed)
            value = regularized_objective(matrix, self.points, sol, self.quality,
                                          self.regularizer)
            return OptimizerReport(sol, (), 1, time.perf_counter() - t0, value, "random")
        raise ValueError(f"unknown optimizer method {method!r}")

    def make_session(self) -> DesignSession:
        default_spec = camera_spec_from_config(self.config.camera)
        cameras = []
        for cam in self.config.session.initial_cameras:
            spec = (
                camera_spec_from_config(cam.spec) if cam.spec is not None else default_spec
            )
            if cam.look_at is not None:
                pose = Pose.look_at(cam.position, cam.look_at)
            else:
                pose = Pose(cam.position, cam.quaternion)
            cameras.append(Viewpoint(spec, pose))
        return DesignSession(
            self.mesh,
            self.points,
            cameras,
            method=self.config.visibility.method,
            bias=self.config.visibility.depth_bias,
            name=self.config.session.name,
        )


def load_scenario(config_path) -> Scenario:
    from .config import load_config

    cfg, base = load_config(config_path)
    return Scenario.from_config(cfg, base)


def build_quality(qcfg) -> QualityFunction:
    if qcfg.kind == "scp":
        return QualityFunction.scp()
    if qcfg.kind == "redundancy":
        if qcfg.weights is not None:
            return QualityFunction.redundancy(QualityWeights(qcfg.weights))
        return QualityFunction.redundancy(sample_quality_weights(qcfg.seed, qcfg.length))
    if qcfg.kind == "threshold_count":
        return QualityFunction.threshold_count(qcfg.cap)
    return QualityFunction.custom_table(qcfg.values)


def _build_mesh(config: ScenarioConfig, base_dir: Path) -> TriangleMesh:
    if config.scene.builtin:
        return bundled_scene(config.scene.builtin)
    return load_mesh(base_dir / config.scene.file, config.scene.format)


def _build_points(config: ScenarioConfig, base_dir: Path, mesh) -> EnvironmentPoints:
    if not config.points:
        raise ValueError("scenario configures no observed points")
    boxes = [
        RoiBox(b.center, b.half_extents, b.resolution, b.orientation)
        for b in config.roi_boxes
    ]
    sets = []
    for i, pcfg in enumerate(config.points):
        if isinstance(pcfg, RoiVoxelPoints):
            if not 0 <= pcfg.box < len(boxes):
                raise ValueError(f"points[{i}].box {pcfg.box} has no matching roi_boxes entry")
            sets.append(voxelize_box(boxes[pcfg.box]))
        elif isinstance(pcfg, UniformBoxPoints):
            sets.append(
                sample_points_uniform(Aabb(pcfg.min, pcfg.max), pcfg.count, pcfg.seed)
            )
        elif isinstance(pcfg, FilePoints):
            sets.append(load_points(base_dir / pcfg.path))
    return merge_point_sets(sets)


def _build_candidates(config: ScenarioConfig, spec: CameraSpec) -> CandidateSet | None:
    ccfg = config.candidates
    if ccfg is None:
        return None
    if isinstance(ccfg, HarbourDefaultCandidates):
        return sample_segment_viewpoints(
            harbour_candidate_segments(), ccfg.positions_per_segment,
            harbour_orientations(), spec,
        )
    if isinstance(ccfg, SegmentCandidates):
        if ccfg.orientations is not None:
            orientations = [np.asarray(q, np.float64) for q in ccfg.orientations]
        else:
            orientations = harbour_orientations()
        return sample_segment_viewpoints(
            np.asarray(ccfg.segments, np.float64), ccfg.positions_per_segment,
            orientations, spec,
        )
    return sample_area_viewpoints(
        np.asarray(ccfg.polygon, np.float64), ccfg.height, ccfg.count, spec, ccfg.seed
    )


def _build_regularizer(config: ScenarioConfig, candidates) -> Regularizer | None:
    rcfg = config.regularizer
    if rcfg.kind == "none" or rcfg.alpha == 0.0:
        return None
    if rcfg.kind == "proximity":
        if candidates is None:
            raise ValueError("proximity regularizer needs candidate placements")
        return Regularizer.proximity(rcfg.alpha, rcfg.min_separation,
                                     candidates.positions())
    return Regularizer.custom(rcfg.alpha, np.asarray(rcfg.matrix, np.float64))
