from .augment import AugmentParams, augment_plan
from .manifest import (
    Component,
    Dataset,
    DatasetStats,
    FloorPlan,
    PairRef,
    SceneManifest,
    apply_split,
    compute_stats,
    holdout_validation_pairs,
    split_scenes,
)
from .store import datasets_equal, export_dataset, import_dataset, pair_blob_path

__all__ = [
    "AugmentParams",
    "augment_plan",
    "Component",
    "Dataset",
    "DatasetStats",
    "FloorPlan",
    "PairRef",
    "SceneManifest",
    "apply_split",
    "compute_stats",
    "holdout_validation_pairs",
    "split_scenes",
    "datasets_equal",
    "export_dataset",
    "import_dataset",
    "pair_blob_path",
]
