"""Boundary distance fields, medial skeletons, and the singular gradient flow."""

from .convexmin import SimplexSolution, min_norm_point
from .distance import (
    DomainError,
    ProjectionSet,
    SuperdiffFan,
    boundary_distance,
    project,
    superdifferential,
)
from .flow import (
    BoundReport,
    Trajectory,
    check_continuous_dependence,
    check_semiconcavity_pairs,
    integrate,
    is_singular,
    verify_speed_bound,
)
from .mintime import FSpec, check_cosh_semiconcavity, hjb_residual, metric_from_control, min_time
from .scene import (
    MetricField,
    Scene,
    SceneValidationError,
    diameter,
    load_scene,
    save_scene,
    scene_from_dict,
    scene_to_dict,
    validate_scene,
)
from .topology import (
    RetractionReport,
    SkeletonCloud,
    check_retraction,
    extract_skeleton,
    homotopy_map,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "DomainError",
    "FSpec",
    "MetricField",
    "ProjectionSet",
    "RetractionReport",
    "Scene",
    "SceneValidationError",
    "SimplexSolution",
    "SkeletonCloud",
    "SuperdiffFan",
    "Trajectory",
    "boundary_distance",
    "check_continuous_dependence",
    "check_cosh_semiconcavity",
    "check_retraction",
    "check_semiconcavity_pairs",
    "diameter",
    "extract_skeleton",
    "homotopy_map",
    "hjb_residual",
    "integrate",
    "is_singular",
    "load_scene",
    "metric_from_control",
    "min_norm_point",
    "min_time",
    "project",
    "save_scene",
    "scene_from_dict",
    "scene_to_dict",
    "superdifferential",
    "validate_scene",
    "verify_speed_bound",
]
