"""Declarative scenario configuration.

A scenario YAML names the scene, how to discretize it, the candidate
placements, the objective, and optimizer/server settings. Validation
errors carry the offending field path. The configuration hash identifies a
scenario in every output artifact, so results can be traced back to their
exact inputs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator


class ConfigError(ValueError):
    """Invalid scenario configuration; message lists field paths."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SceneConfig(_Model):
    file: Optional[str] = None
    builtin: Optional[str] = None
    format: Optional[Literal["obj", "stl", "ply"]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.file is None) == (self.builtin is None):
            raise ValueError("exactly one of 'file' or 'builtin' must be set")
        return self


class CameraSpecConfig(_Model):
    perspective_angle: float = 90.0
    resolution: tuple[int, int] = (640, 400)
    min_range: float = Field(0.5, gt=0)
    max_range: float = Field(80.0, gt=0)

    @model_validator(mode="after")
    def _range_order(self):
        if self.min_range >= self.max_range:
            raise ValueError("min_range must be < max_range")
        return self


class RoiBoxConfig(_Model):
    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]
    resolution: tuple[int, int, int]
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)


class RoiVoxelPoints(_Model):
    kind: Literal["roi_voxels"]
    box: int = 0


class UniformBoxPoints(_Model):
    kind: Literal["uniform_box"]
    min: tuple[float, float, float]
    max: tuple[float, float, float]
    count: int = Field(gt=0)
    seed: int = 0


class FilePoints(_Model):
    kind: Literal["file"]
    path: str


PointsConfig = Union[RoiVoxelPoints, UniformBoxPoints, FilePoints]


class SegmentCandidates(_Model):
    kind: Literal["segments"]
    segments: list[list[tuple[float, float, float]]]
    positions_per_segment: int = Field(20, ge=1)
    orientations: Optional[list[tuple[float, float, float, float]]] = None
    orientation_preset: Optional[Literal["downward_15"]] = "downward_15"

    @model_validator(mode="after")
    def _check(self):
        for i, seg in enumerate(self.segments):
            if len(seg) != 2:
                raise ValueError(f"segments[{i}] must have exactly 2 endpoints")
        if self.orientations is None and self.orientation_preset is None:
            raise ValueError("need 'orientations' or 'orientation_preset'")
        return self


class AreaCandidates(_Model):
    kind: Literal["area"]
    polygon: list[tuple[float, float]]
    height: float
    count: int = Field(gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if len(self.polygon) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        return self


class HarbourDefaultCandidates(_Model):
    kind: Literal["harbour_default"]
    positions_per_segment: int = Field(20, ge=1)


CandidatesConfig = Union[SegmentCandidates, AreaCandidates, HarbourDefaultCandidates]


class QualityConfig(_Model):
    kind: Literal["scp", "redundancy", "threshold_count", "custom_table"] = "scp"
    weights: Optional[list[float]] = None
    seed: int = 0
    length: int = Field(6, ge=1)
    cap: int = Field(3, ge=1)
    values: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "custom_table" and self.values is None:
            raise ValueError("custom_table needs 'values'")
        return self


class RegularizerConfig(_Model):
    kind: Literal["none", "proximity", "custom_matrix"] = "none"
    alpha: float = Field(0.0, ge=0)
    min_separation: float = Field(2.0, gt=0)
    matrix: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "custom_matrix" and self.matrix is None:
            raise ValueError("custom_matrix needs 'matrix'")
        return self


class OptimizerConfig(_Model):
    method: Literal["greedy", "lazy_greedy", "brute_force", "random"] = "lazy_greedy"
    k: int = Field(10, ge=1)
    seed: int = 0
    budget: int = Field(2_000_000, gt=0)


class VisibilityConfig(_Model):
    method: Literal["zbuffer", "raycast"] = "zbuffer"
    depth_bias: Optional[float] = None
    jobs: int = Field(1, ge=1)


class InitialCameraConfig(_Model):
    position: tuple[float, float, float]
    quaternion: Optional[tuple[float, float, float, float]] = None
    look_at: Optional[tuple[float, float, float]] = None
    spec: Optional[CameraSpecConfig] = None

    @model_validator(mode="after")
    def _one_orientation(self):
        if (self.quaternion is None) == (self.look_at is None):
            raise ValueError("exactly one of 'quaternion' or 'look_at' must be set")
        return self


class SessionConfig(_Model):
    initial_cameras: list[InitialCameraConfig] = []
    name: str = "session"


class ServerConfig(_Model):
    host: str = "127.0.0.1"
    port: int = Field(8765, ge=1, le=65535)


class ScenarioConfig(_Model):
    scene: SceneConfig
    camera: CameraSpecConfig = CameraSpecConfig()
    roi_boxes: list[RoiBoxConfig] = []
    points: list[PointsConfig] = []
    candidates: Optional[CandidatesConfig] = None
    quality: QualityConfig = QualityConfig()
    regularizer: RegularizerConfig = RegularizerConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    visibility: VisibilityConfig = VisibilityConfig()
    session: SessionConfig = SessionConfig()
    server: ServerConfig = ServerConfig()

    def config_hash(self) -> str:
        """sha256 over the canonical JSON dump; stable across load order."""
        dump = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(dump.encode()).hexdigest()

    def referenced_files(self) -> list[str]:
        files = []
        if self.scene.file:
            files.append(self.scene.file)
        for p in self.points:
            if isinstance(p, FilePoints):
                files.append(p.path)
        return files


def _format_validation_error(err: ValidationError) -> str:
    lines = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"])
        lines.append(f"{loc or '<root>'}: {item['msg']}")
    return "\n".join(lines)


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate an already-parsed mapping; no filesystem checks."""
    try:
        return ScenarioConfig.model_validate(doc)
    except ValidationError as err:
        raise ConfigError(
            f"invalid scenario configuration:\n{_format_validation_error(err)}"
        ) from err


def load_config(path) -> tuple[ScenarioConfig, Path]:
    """Read, validate, and cross-check a scenario YAML.

    Returns the config and its base directory (relative file references
    resolve against it). Referenced files must exist at load time.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: YAML parse error: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    cfg = parse_config(doc)
    base = path.parent
    missing = [f for f in cfg.referenced_files() if not (base / f).is_file()]
    if missing:
        raise ConfigError(
            "referenced files missing: " + ", ".join(str(base / f) for f in missing)
        )
    return cfg, base
