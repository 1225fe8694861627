"""HTTP service backing the alignment annotation UI.

Serves scene metadata, plan images, bird's-eye rasters, sampled point
clouds and source photos from a workspace directory (a dataset root whose
manifest registers scenes, floor plans and reconstruction components), and
persists alignment records to an append-only journal.
"""

import hashlib
import io
import threading
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel, Field

from ..colmap_io import parse_model
from ..dataset.manifest import scene_to_dict
from ..dataset.store import import_dataset
from ..errors import DegenerateUp, EmptyModel, ValidationError, VersionConflict
from ..geometry import SimilarityTransform2D, estimate_up_axis, up_axis_rectification
from .journal import AlignmentJournal
from .raster import rasterize_topdown

DEFAULT_PAGE_SIZE = 50


class SimilarityBody(BaseModel):
    scale: float = Field(gt=0)
    theta: float
    tx: float
    ty: float


class AlignmentPut(BaseModel):
    similarity: SimilarityBody
    rectification: Optional[list] = None  # row-major 3x3
    annotator: str = ""
    expected_version: Optional[int] = None


class _Workspace:
    """Loaded manifest plus caches of parsed models and rendered rasters."""

    def __init__(self, root):
        self.root = Path(root)
        self.dataset = import_dataset(self.root, load_pairs=False)
        self._models = {}
        self._rasters = {}
        self._lock = threading.Lock()

    def scene(self, scene_id):
        scene = self.dataset.scenes.get(scene_id)
        if scene is None:
            raise HTTPException(404, f"unknown scene {scene_id!r}")
        return scene

    def model(self, scene_id, component_id):
        key = (scene_id, component_id)
        with self._lock:
            cached = self._models.get(key)
        if cached is not None:
            return cached
        scene = self.scene(scene_id)
        try:
            component = scene.component(component_id)
        except KeyError:
            raise HTTPException(404, f"unknown component {component_id!r}") from None
        model_path = Path(component.model_path)
        if not model_path.is_absolute():
            model_path = self.root / model_path
        model = parse_model(model_path)
        with self._lock:
            self._models[key] = model
        return model

    def rectification(self, scene_id, component_id, plan_id, journal):
        """Journal override, then manifest alignment, then estimated up axis."""
        if plan_id is not None:
            record = journal.latest(scene_id, component_id, plan_id)
            if record is not None and record.rectification is not None:
                return record.rectification
            scene = self.scene(scene_id)
            for a in scene.alignments:
                if a.component_id == component_id and a.plan_id == plan_id:
                    return a.rectification
        model = self.model(scene_id, component_id)
        try:
            return up_axis_rectification(estimate_up_axis(model))
        except DegenerateUp:
            return np.eye(3)

    def raster_png(self, scene_id, component_id, rectification, resolution):
        digest = hashlib.sha256(
            np.asarray(rectification, dtype=np.float64).tobytes()
        ).hexdigest()[:16]
        key = (scene_id, component_id, digest, resolution)
        with self._lock:
            cached = self._rasters.get(key)
        if cached is not None:
            return cached
        model = self.model(scene_id, component_id)
        raster = rasterize_topdown(model, rectification, resolution)
        png = _encode_png(raster.image)
        entry = (png, raster.bounds, raster.pixels_per_unit)
        with self._lock:
            # fill-once: the first computed raster for a key wins
            entry = self._rasters.setdefault(key, entry)
        return entry


def _encode_png(array) -> bytes:
    from PIL import Image

    img = Image.fromarray(array)
    out = io.BytesIO()
    img.save(out, format="PNG")
    return out.getvalue()


def _paginate(items, page, page_size):
    start = (page - 1) * page_size
    return {
        "page": page,
        "page_size": page_size,
        "total": len(items),
        "items": items[start:start + page_size],
    }


def create_app(root, journal_path, ui_dir=None) -> FastAPI:
    """Service over a workspace; ``ui_dir`` optionally mounts the built
    annotation frontend (its index.html and dist/) under /ui."""
    workspace = _Workspace(root)
    journal = AlignmentJournal(journal_path)
    app = FastAPI(title="c3 alignment service")

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.get("/scenes")
    def list_scenes(page: int = Query(1, ge=1),
                    page_size: int = Query(DEFAULT_PAGE_SIZE, ge=1, le=500)):
        ids = sorted(workspace.dataset.scenes)
        summaries = [
            {
                "scene_id": sid,
                "name": workspace.dataset.scenes[sid].name,
                "n_plans": len(workspace.dataset.scenes[sid].floor_plans),
                "n_components": len(workspace.dataset.scenes[sid].components),
            }
            for sid in ids
        ]
        out = _paginate(summaries, page, page_size)
        out["scenes"] = out.pop("items")
        return out

    @app.get("/scenes/{scene_id}")
    def get_scene(scene_id: str):
        return scene_to_dict(workspace.scene(scene_id))

    @app.get("/scenes/{scene_id}/plans/{plan_id}/image")
    def get_plan_image(scene_id: str, plan_id: str):
        from PIL import Image

        scene = workspace.scene(scene_id)
        try:
            fp = scene.plan(plan_id)
        except KeyError:
            raise HTTPException(404, f"unknown plan {plan_id!r}") from None
        path = Path(fp.path)
        if not path.is_absolute():
            path = workspace.root / path
        if not path.is_file():
            raise HTTPException(404, f"plan image {path.name} not on disk")
        img = Image.open(path)
        out = io.BytesIO()
        img.save(out, format="PNG")
        return Response(out.getvalue(), media_type="image/png")

    @app.get("/scenes/{scene_id}/components/{component_id}/topdown")
    def get_topdown(scene_id: str, component_id: str,
                    res: int = Query(512, ge=16, le=4096),
                    plan: Optional[str] = None):
        rect = workspace.rectification(scene_id, component_id, plan, journal)
        try:
            png, bounds, ppu = workspace.raster_png(scene_id, component_id, rect, res)
        except EmptyModel as exc:
            raise HTTPException(422, str(exc)) from None
        headers = {
            "X-C3-Bounds": ",".join(format(v, ".17g") for v in bounds),
            "X-C3-Pixels-Per-Unit": format(ppu, ".17g"),
            "X-C3-Rectification": ",".join(
                format(v, ".17g") for v in np.asarray(rect).ravel()
            ),
        }
        return Response(png, media_type="image/png", headers=headers)

    @app.get("/scenes/{scene_id}/components/{component_id}/points")
    def get_points(scene_id: str, component_id: str,
                   sample: int = Query(5000, ge=1, le=200_000),
                   seed: int = Query(0)):
        model = workspace.model(scene_id, component_id)
        ids = sorted(model.points)
        xyz = np.array([model.points[i].xyz for i in ids])
        rgb = np.array([model.points[i].rgb for i in ids])
        if sample < len(ids):
            pick = np.sort(np.random.default_rng(seed).choice(len(ids), sample, replace=False))
            xyz, rgb = xyz[pick], rgb[pick]
        return {
            "count": len(xyz),
            "points": [[float(v) for v in p] for p in xyz],
            "colors": [[int(v) for v in c] for c in rgb],
        }

    @app.get("/scenes/{scene_id}/photos")
    def list_photos(scene_id: str, page: int = Query(1, ge=1),
                    page_size: int = Query(24, ge=1, le=500)):
        scene = workspace.scene(scene_id)
        names = set()
        for component in scene.components:
            model = workspace.model(scene_id, component.component_id)
            names.update(img.name for img in model.images.values())
        out = _paginate(sorted(names), page, page_size)
        out["photos"] = out.pop("items")
        return out

    @app.get("/scenes/{scene_id}/photos/{name}")
    def get_photo(scene_id: str, name: str):
        workspace.scene(scene_id)
        if "/" in name or "\\" in name or ".." in name:
            raise HTTPException(404, "bad photo name")
        path = workspace.root / "scenes" / scene_id / "photos" / name
        if not path.is_file():
            raise HTTPException(404, f"photo {name!r} not on disk")
        media = "image/png" if path.suffix.lower() == ".png" else "image/jpeg"
        return Response(path.read_bytes(), media_type=media)

    @app.get("/scenes/{scene_id}/alignments/{component_id}/{plan_id}")
    def get_alignment(scene_id: str, component_id: str, plan_id: str):
        workspace.scene(scene_id)
        record = journal.latest(scene_id, component_id, plan_id)
        if record is None:
            raise HTTPException(404, "no alignment stored for this key")
        return record.to_dict()

    @app.put("/scenes/{scene_id}/alignments/{component_id}/{plan_id}")
    def put_alignment(scene_id: str, component_id: str, plan_id: str,
                      body: AlignmentPut):
        scene = workspace.scene(scene_id)
        try:
            scene.plan(plan_id)
            scene.component(component_id)
        except KeyError as exc:
            raise HTTPException(404, str(exc)) from None
        rect = None
        if body.rectification is not None:
            if len(body.rectification) != 9:
                raise HTTPException(422, "rectification must hold 9 values")
            rect = np.asarray(body.rectification, dtype=np.float64).reshape(3, 3)
        try:
            version = journal.put(
                scene_id, component_id, plan_id,
                SimilarityTransform2D(
                    body.similarity.scale, body.similarity.theta,
                    body.similarity.tx, body.similarity.ty,
                ),
                rectification=rect,
                annotator=body.annotator,
                expected_version=body.expected_version,
            )
        except VersionConflict as exc:
            raise HTTPException(
                409, {"error": str(exc), "current_version": exc.current_version}
            ) from None
        except (ValidationError, ValueError) as exc:
            raise HTTPException(422, str(exc)) from None
        return {"version": version}

    app.state.workspace = workspace
    app.state.journal = journal
    return app
