"""Camera network design over triangle-mesh scenes.

Discretizes an environment into weighted observation points and candidate
camera placements, evaluates per-point visibility with a z-buffer or ray
casting, and selects camera subsets that maximize saturating coverage
objectives, either in batch or in a live editing session.
"""

from .bench import (
    BenchRow,
    linear_r2,
    load_bench_csv,
    ring_cameras,
    run_latency_bench,
    save_bench_csv,
)
from .camera import (
    CameraSpec,
    Pose,
    Viewpoint,
    frustum_contains,
    project_point,
    project_points,
)
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .discretize import (
    CandidateSet,
    EnvironmentPoints,
    RoiBox,
    load_points,
    merge_point_sets,
    sample_area_viewpoints,
    sample_points_uniform,
    sample_segment_viewpoints,
    save_points,
    voxelize_box,
)
from .evaluation import (
    CoverageReport,
    CrossEvalTable,
    MemoryBudgetError,
    cross_evaluate,
    dense_coverage_audit,
    evaluate_external_solution,
)
from .geometry import (
    Aabb,
    Bvh,
    MeshLoadError,
    TriangleMesh,
    build_bvh,
    load_mesh,
    ray_intersect,
    ray_intersect_brute,
    save_obj,
    save_ply,
    save_stl,
)
from .objective import (
    G_eval,
    QualityFunction,
    QualityWeights,
    Regularizer,
    Solution,
    coverage,
    marginal_gain,
    regularized_objective,
    sample_quality_weights,
    t_eval,
)
from .optimize import (
    BudgetExceeded,
    OptimizerReport,
    brute_force,
    greedy,
    lazy_greedy,
    random_solution,
)
from .scenario import Scenario, camera_spec_from_config, load_scenario
from .scenes import (
    bundled_scene,
    bundled_scene_names,
    harbour_candidate_segments,
    harbour_orientations,
    make_cube,
    make_ground,
    make_harbour_candidates,
    make_harbour_scene,
    make_office_scene,
    make_terrain_scene,
)
from .selection import ExhaustiveSelector, GreedySelector, RandomSelector
from .server import SessionServer, create_app, serve
from .session import (
    DesignSession,
    LatencyStats,
    TransferFunction,
    UpdateSummary,
    VolumeFrame,
    solution_viewpoints,
)
from .visibility import (
    DepthBuffer,
    VisibilityMatrix,
    build_visibility_matrix,
    default_depth_bias,
    f_counts,
    render_depth,
    visible_points_raycast,
    visible_points_zbuffer,
)

__version__ = "0.1.0"
