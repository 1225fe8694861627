"""Scene registry, deterministic scene-level splits, and dataset statistics."""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..correspondence import CorrespondenceSet
from ..errors import EmptyInput
from ..geometry import PlanAlignment, SimilarityTransform2D
from ..sourcing import GeoPoint

SPLITS = ("train", "test", "none")


@dataclass
class FloorPlan:
    plan_id: str
    path: str  # image file, relative to the dataset root when exported
    width: int
    height: int
    accepted: bool = True  # manual canonicality inspection outcome

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"plan {self.plan_id}: dimensions must be positive")


@dataclass
class Component:
    component_id: str
    model_path: str  # sparse-model directory


@dataclass
class PairRef:
    """Locator for one stored correspondence set."""

    plan_id: str
    image_id: int
    photo_width: int
    photo_height: int


@dataclass
class SceneManifest:
    scene_id: str
    name: str = ""
    geo: GeoPoint = None
    map_link: str = ""  # opaque external map URL, relayed as-is
    floor_plans: list = field(default_factory=list)
    components: list = field(default_factory=list)
    alignments: list = field(default_factory=list)
    pairs: list = field(default_factory=list)  # PairRef
    split: str = "none"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"scene {self.scene_id}: unknown split {self.split!r}")

    def plan(self, plan_id):
        for fp in self.floor_plans:
            if fp.plan_id == plan_id:
                return fp
        raise KeyError(f"scene {self.scene_id}: unknown plan {plan_id!r}")

    def component(self, component_id):
        for c in self.components:
            if c.component_id == component_id:
                return c
        raise KeyError(f"scene {self.scene_id}: unknown component {component_id!r}")

    def validate(self):
        plan_ids = {fp.plan_id for fp in self.floor_plans}
        comp_ids = {c.component_id for c in self.components}
        for a in self.alignments:
            if a.plan_id not in plan_ids:
                raise ValueError(
                    f"scene {self.scene_id}: alignment references unknown plan {a.plan_id!r}"
                )
            if a.component_id not in comp_ids:
                raise ValueError(
                    f"scene {self.scene_id}: alignment references unknown component "
                    f"{a.component_id!r}"
                )
        for p in self.pairs:
            if p.plan_id not in plan_ids:
                raise ValueError(
                    f"scene {self.scene_id}: pair references unknown plan {p.plan_id!r}"
                )


@dataclass
class Dataset:
    """In-memory dataset: scene manifests plus loaded correspondence sets.

    ``root`` is the directory relative plan/model paths resolve against;
    it is set by import/export and None for purely in-memory datasets.
    """

    scenes: dict = field(default_factory=dict)  # scene_id -> SceneManifest
    pair_sets: dict = field(default_factory=dict)  # (scene, plan, image) -> set
    root: object = None

    def add_scene(self, scene: SceneManifest):
        if scene.scene_id in self.scenes:
            raise ValueError(f"duplicate scene_id {scene.scene_id!r}")
        self.scenes[scene.scene_id] = scene

    def add_pair(self, cset: CorrespondenceSet):
        scene = self.scenes[cset.scene_id]
        if cset.key in self.pair_sets:
            raise ValueError(f"duplicate pair {cset.key}")
        self.pair_sets[cset.key] = cset
        scene.pairs.append(
            PairRef(cset.plan_id, cset.image_id, cset.photo_size[0], cset.photo_size[1])
        )

    def iter_pairs(self, split=None):
        for key in sorted(self.pair_sets, key=lambda k: (k[0], k[1], k[2])):
            if split is not None and self.scenes[key[0]].split != split:
                continue
            yield self.pair_sets[key]


# --------------------------------------------------------------------- splits

def _stable_fraction(scene_id: str, seed: int) -> float:
    digest = hashlib.sha256(f"{seed}:{scene_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def split_scenes(scene_ids, seed: int, test_fraction: float, overrides=None) -> dict:
    """Deterministic scene-level split; every scene lands wholly in one side.

    ``overrides`` maps scene_id to a forced split and is honored before the
    hash. Accepts SceneManifest objects or bare ids.
    """
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    ids = [s.scene_id if isinstance(s, SceneManifest) else s for s in scene_ids]
    if not ids:
        raise EmptyInput("no scenes to split")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate scene ids")
    overrides = overrides or {}
    assignment = {}
    for sid in ids:
        if sid in overrides:
            if overrides[sid] not in ("train", "test"):
                raise ValueError(f"override for {sid!r} must be train or test")
            assignment[sid] = overrides[sid]
        else:
            assignment[sid] = "test" if _stable_fraction(sid, seed) < test_fraction else "train"
    return assignment


def apply_split(dataset: Dataset, assignment: dict):
    for sid, split in assignment.items():
        dataset.scenes[sid].split = split


def holdout_validation_pairs(pair_keys, seed: int, fraction: float) -> set:
    """Pair-level holdout for validation inside the training split.

    Scene-level test isolation stays intact: this only partitions pairs of
    scenes already assigned to train. Returns the held-out keys.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    held = set()
    for key in pair_keys:
        token = f"{seed}:val:{key[0]}/{key[1]}/{key[2]}"
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        if int.from_bytes(digest[:8], "big") / 2**64 < fraction:
            held.add(key)
    return held


# ----------------------------------------------------------------- statistics

@dataclass
class DatasetStats:
    scene_count: int
    plan_count: int
    photo_count: int
    pose_count: int
    pair_count: int
    total_correspondences: int
    min_per_pair: int = None  # absent when there are no pairs
    max_per_pair: int = None
    mean_per_pair: float = None

    def merge(self, other: "DatasetStats") -> "DatasetStats":
        """Combine stats of scene-disjoint partitions."""
        pair_count = self.pair_count + other.pair_count
        total = self.total_correspondences + other.total_correspondences
        mins = [m for m in (self.min_per_pair, other.min_per_pair) if m is not None]
        maxs = [m for m in (self.max_per_pair, other.max_per_pair) if m is not None]
        return DatasetStats(
            scene_count=self.scene_count + other.scene_count,
            plan_count=self.plan_count + other.plan_count,
            photo_count=self.photo_count + other.photo_count,
            pose_count=self.pose_count + other.pose_count,
            pair_count=pair_count,
            total_correspondences=total,
            min_per_pair=min(mins) if mins else None,
            max_per_pair=max(maxs) if maxs else None,
            mean_per_pair=total / pair_count if pair_count else None,
        )


def compute_stats(dataset: Dataset, split=None) -> DatasetStats:
    """Exact counts by enumeration over the loaded pairs.

    Fixture contract for the full C3 release: 597 scenes, 648 unique plans,
    ~85K photos/poses, ~90K pairs, ~153M correspondences, per-pair counts
    ranging 1..13,262 with mean 1,711.
    """
    scene_ids = [
        sid for sid, scene in dataset.scenes.items() if split is None or scene.split == split
    ]
    selected = set(scene_ids)
    plan_count = sum(len(dataset.scenes[sid].floor_plans) for sid in scene_ids)
    photos = set()
    counts = []
    for key, cset in dataset.pair_sets.items():
        if key[0] not in selected:
            continue
        photos.add((key[0], key[2]))
        counts.append(len(cset))
    counts = np.asarray(counts, dtype=np.int64)
    return DatasetStats(
        scene_count=len(scene_ids),
        plan_count=plan_count,
        photo_count=len(photos),
        pose_count=len(photos),  # each photo carries exactly one pose
        pair_count=len(counts),
        total_correspondences=int(counts.sum()) if len(counts) else 0,
        min_per_pair=int(counts.min()) if len(counts) else None,
        max_per_pair=int(counts.max()) if len(counts) else None,
        mean_per_pair=float(counts.mean()) if len(counts) else None,
    )


# -------------------------------------------------------- manifest (de)coding

def _alignment_to_dict(a: PlanAlignment) -> dict:
    return {
        "component_id": a.component_id,
        "plan_id": a.plan_id,
        "plan_width": a.plan_width,
        "plan_height": a.plan_height,
        "similarity": {
            "scale": a.similarity.scale,
            "theta": a.similarity.theta,
            "tx": a.similarity.tx,
            "ty": a.similarity.ty,
        },
        "rectification": [float(v) for v in np.asarray(a.rectification).ravel()],
    }


def _alignment_from_dict(d: dict) -> PlanAlignment:
    sim = d["similarity"]
    return PlanAlignment(
        rectification=np.asarray(d["rectification"], dtype=np.float64).reshape(3, 3),
        similarity=SimilarityTransform2D(sim["scale"], sim["theta"], sim["tx"], sim["ty"]),
        plan_width=d["plan_width"],
        plan_height=d["plan_height"],
        component_id=d["component_id"],
        plan_id=d["plan_id"],
    )


def scene_to_dict(scene: SceneManifest) -> dict:
    return {
        "scene_id": scene.scene_id,
        "name": scene.name,
        "geo": None if scene.geo is None else {"lat": scene.geo.lat, "lon": scene.geo.lon},
        "map_link": scene.map_link,
        "floor_plans": [
            {
                "plan_id": fp.plan_id,
                "path": fp.path,
                "width": fp.width,
                "height": fp.height,
                "accepted": fp.accepted,
            }
            for fp in scene.floor_plans
        ],
        "components": [
            {"component_id": c.component_id, "model_path": c.model_path}
            for c in scene.components
        ],
        "alignments": [_alignment_to_dict(a) for a in scene.alignments],
        "pairs": [
            {
                "plan_id": p.plan_id,
                "image_id": p.image_id,
                "photo_width": p.photo_width,
                "photo_height": p.photo_height,
            }
            for p in scene.pairs
        ],
        "split": scene.split,
    }


def scene_from_dict(d: dict) -> SceneManifest:
    return SceneManifest(
        scene_id=d["scene_id"],
        name=d.get("name", ""),
        geo=None if d.get("geo") is None else GeoPoint(d["geo"]["lat"], d["geo"]["lon"]),
        map_link=d.get("map_link", ""),
        floor_plans=[
            FloorPlan(fp["plan_id"], fp["path"], fp["width"], fp["height"],
                      fp.get("accepted", True))
            for fp in d.get("floor_plans", [])
        ],
        components=[
            Component(c["component_id"], c["model_path"]) for c in d.get("components", [])
        ],
        alignments=[_alignment_from_dict(a) for a in d.get("alignments", [])],
        pairs=[
            PairRef(p["plan_id"], p["image_id"], p["photo_width"], p["photo_height"])
            for p in d.get("pairs", [])
        ],
        split=d.get("split", "none"),
    )
