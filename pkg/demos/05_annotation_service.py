"""
The alignment annotation service, end to end
============================================

Builds a workspace (manifest + model files + plan image), runs the HTTP
service in-process, walks the endpoints the browser UI uses, saves an
alignment with optimistic versioning, and derives correspondences from the
saved record. For a real server do:

    c3 align-serve --root <workspace> --journal <journal> --port 8008
"""

import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from c3kit.align_service import AlignmentJournal, create_app
from c3kit.cli import _alignments_for_scene
from c3kit.colmap_io import parse_model
from c3kit.correspondence import derive_scene
from c3kit.dataset import import_dataset
from c3kit.synthetic import write_workspace

rng = np.random.default_rng(55)
workdir = Path(tempfile.mkdtemp(prefix="c3_demo_"))
workspace = workdir / "workspace"
journal_path = workdir / "alignments.journal"

write_workspace(workspace, rng, n_scenes=2)
client = TestClient(create_app(workspace, journal_path))

scenes = client.get("/scenes").json()
print("scenes:", [s["scene_id"] for s in scenes["scenes"]])

# Everything the annotation page shows comes from these endpoints.
plan_png = client.get("/scenes/scene_000/plans/plan0/image")
topdown = client.get("/scenes/scene_000/components/comp0/topdown?res=256")
points = client.get("/scenes/scene_000/components/comp0/points?sample=200&seed=1").json()
photos = client.get("/scenes/scene_000/photos?page=1&page_size=8").json()
print(f"plan image: {len(plan_png.content)} bytes, "
      f"top-down raster: {len(topdown.content)} bytes "
      f"(bounds {topdown.headers['x-c3-bounds']})")
print(f"orbit-view sample: {points['count']} points, "
      f"photo strip: {photos['total']} photos")

# Saving an alignment is optimistic: stale writers get a 409 and the
# current version back.
url = "/scenes/scene_000/alignments/comp0/plan0"
print("GET before any save ->", client.get(url).status_code)
body = {"similarity": {"scale": 24.0, "theta": 0.35, "tx": 200.0, "ty": 150.0},
        "annotator": "demo"}
print("first save ->", client.put(url, json=body).json())
stale = dict(body, expected_version=0)
print("stale save ->", client.put(url, json=stale).status_code)
fresh = dict(body, expected_version=1)
fresh["similarity"] = dict(body["similarity"], scale=26.0)
print("fresh save ->", client.put(url, json=fresh).json())
print("stored:", client.get(url).json()["similarity"])

# The derivation step folds saved journal records into alignments.
dataset = import_dataset(workspace, load_pairs=False)
journal = AlignmentJournal(journal_path)
scene = dataset.scenes["scene_000"]
alignments = _alignments_for_scene(scene, journal)
model = parse_model(workspace / scene.component("comp0").model_path)
derived = derive_scene(model, alignments[0], scene_id="scene_000",
                       max_reproj_error_px=10.0)
print(f"derived from the saved alignment: {len(derived.sets)} pairs, "
      f"{derived.total_records()} correspondences")
