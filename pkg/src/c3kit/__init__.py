"""c3kit: build and evaluate floor plan / photo correspondence datasets."""

__version__ = "0.1.0"

from .colmap_io import (
    CameraIntrinsics,
    ImagePose,
    ScenePoint,
    SparseModel,
    models_equal,
    parse_model,
    validate_model,
    write_model,
)
from .correspondence import (
    Correspondence,
    CorrespondenceSet,
    SceneCorrespondences,
    derive_pair,
    derive_scene,
)
from .geometry import (
    PlanAlignment,
    PlanPose,
    SimilarityTransform2D,
    apply_similarity,
    camera_plan_pose,
    compose_similarity,
    estimate_similarity,
    estimate_up_axis,
    invert_similarity,
    project_point,
    qvec_to_matrix,
    rectify_and_flatten,
)
from .metrics import (
    MetricReport,
    densify_sparse,
    evaluate,
    improvement_ratio,
    pck,
    pointmap_to_predictions,
    pr_curve,
    rmse,
    wilcoxon_signed_rank,
)
from .predictions import PredictionSet
from .sourcing import GeoPoint, infer_scene_name, is_scene_of_interest, within_radius

__all__ = [
    "CameraIntrinsics", "ImagePose", "ScenePoint", "SparseModel",
    "models_equal", "parse_model", "validate_model", "write_model",
    "Correspondence", "CorrespondenceSet", "SceneCorrespondences",
    "derive_pair", "derive_scene",
    "PlanAlignment", "PlanPose", "SimilarityTransform2D",
    "apply_similarity", "camera_plan_pose", "compose_similarity",
    "estimate_similarity", "estimate_up_axis", "invert_similarity",
    "project_point", "qvec_to_matrix", "rectify_and_flatten",
    "MetricReport", "densify_sparse", "evaluate", "improvement_ratio",
    "pck", "pointmap_to_predictions", "pr_curve", "rmse",
    "wilcoxon_signed_rank",
    "PredictionSet",
    "GeoPoint", "infer_scene_name", "is_scene_of_interest", "within_radius",
]
