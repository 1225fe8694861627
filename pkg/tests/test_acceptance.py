"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete. Every tolerance is pinned here, not configurable.
The UI-consistency criterion lives with the frontend
(frontend/tests/consistency.test.ts and save_roundtrip.test.ts, run via
``npm test``).
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.stats import rankdata

import c3kit
from c3kit.colmap_io import models_equal, parse_model, write_model
from c3kit.dataset import export_dataset, import_dataset
from c3kit.errors import IntegrityError, VersionConflict
from c3kit.geometry import SimilarityTransform2D, apply_similarity, estimate_similarity
from c3kit.metrics import (
    DEFAULT_CORRECT_THRESH,
    improvement_ratio,
    pck,
    pr_curve,
    record_errors,
    rmse,
    wilcoxon_signed_rank,
)
from c3kit.predictions import PredictionSet, write_predictions_text
from c3kit.sourcing import DEFAULT_RADIUS_M, EARTH_RADIUS_M, GeoPoint, haversine_m, infer_scene_name, within_radius
from c3kit.synthetic import make_random_model, make_scene_dataset, random_unit_quaternion


def ok(name):
    print(f"[ACCEPTANCE] {name}: PASS")


def test_parser_round_trip_200_models():
    rng = np.random.default_rng(101)
    started = time.monotonic()
    for trial in range(200):
        n_points = int(10 ** rng.uniform(0, 4))
        model = make_random_model(
            rng, n_points=n_points,
            n_images=int(rng.integers(1, 7)),
            n_cameras=int(rng.integers(1, 4)),
            obs_prob=float(rng.uniform(0.05, 0.4)),
        )
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            from pathlib import Path

            tmp = Path(tmp)
            write_model(model, tmp / "bin", "binary")
            assert models_equal(model, parse_model(tmp / "bin", "binary"))

            write_model(model, tmp / "txt", "text")
            assert models_equal(model, parse_model(tmp / "txt", "text"),
                                float_tol=1e-9)

            if trial % 10 == 0 and model.points:
                # inject one dangling observation reference into the files
                from c3kit.colmap_io import _write_images_binary

                img_id = next(
                    (i for i, img in model.images.items()
                     if np.any(img.point3d_ids >= 0)), None,
                )
                if img_id is not None:
                    img = model.images[img_id]
                    ids = img.point3d_ids.copy()
                    ids[np.flatnonzero(ids >= 0)[0]] = 10**15
                    model.images[img_id] = img._replace(point3d_ids=ids)
                    _write_images_binary(model.images, tmp / "bin" / "images.bin")
                    with pytest.raises(IntegrityError):
                        parse_model(tmp / "bin", "binary")
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"round-trip suite took {elapsed:.1f}s"
    ok(f"parser round-trip, 200 models in {elapsed:.1f}s")


def _oracle_project(model_id, params, rot, tvec, point):
    """Independent pinhole+distortion evaluation, written longhand."""
    cam = [
        rot[0][0] * point[0] + rot[0][1] * point[1] + rot[0][2] * point[2] + tvec[0],
        rot[1][0] * point[0] + rot[1][1] * point[1] + rot[1][2] * point[2] + tvec[1],
        rot[2][0] * point[0] + rot[2][1] * point[1] + rot[2][2] * point[2] + tvec[2],
    ]
    xn = cam[0] / cam[2]
    yn = cam[1] / cam[2]
    r2 = xn * xn + yn * yn
    if model_id == 0:
        f, cx, cy = params
        return f * xn + cx, f * yn + cy
    if model_id == 1:
        fx, fy, cx, cy = params
        return fx * xn + cx, fy * yn + cy
    if model_id == 2:
        f, cx, cy, k = params
        d = 1 + k * r2
        return f * xn * d + cx, f * yn * d + cy
    if model_id == 3:
        f, cx, cy, k1, k2 = params
        d = 1 + k1 * r2 + k2 * r2 * r2
        return f * xn * d + cx, f * yn * d + cy
    fx, fy, cx, cy, k1, k2, p1, p2 = params
    d = 1 + k1 * r2 + k2 * r2 * r2
    xd = xn * d + 2 * p1 * xn * yn + p2 * (r2 + 2 * xn * xn)
    yd = yn * d + p1 * (r2 + 2 * yn * yn) + 2 * p2 * xn * yn
    return fx * xd + cx, fy * yd + cy


def test_projection_oracle_50_scenes():
    from c3kit.colmap_io import ImagePose
    from c3kit.geometry import qvec_to_matrix
    from c3kit.synthetic import random_camera

    rng = np.random.default_rng(202)
    for scene in range(50):
        model_id = scene % 5  # all five supported models cycle through
        cam = random_camera(rng, 1, model_id)
        qvec = random_unit_quaternion(rng)
        tvec = rng.normal(0, 1, 3)
        pose = ImagePose(1, qvec, tvec, 1, "img.jpg",
                         np.empty((0, 2)), np.empty(0, dtype=np.int64))
        rot = qvec_to_matrix(qvec).tolist()
        for _ in range(40):
            # generate points guaranteed in front of this camera
            cam_pt = np.array([
                rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 1.0,
            ]) * rng.uniform(1.0, 10.0)
            world = np.linalg.solve(np.asarray(rot), cam_pt - tvec)
            expected = _oracle_project(model_id, cam.params.tolist(), rot,
                                       tvec.tolist(), world.tolist())
            got = c3kit.project_point(cam, pose, world)
            assert abs(got[0] - expected[0]) < 1e-9
            assert abs(got[1] - expected[1]) < 1e-9
    ok("projection oracle, 50 scenes x 40 points, all five camera models")


def test_transform_recovery():
    rng = np.random.default_rng(303)
    for _ in range(1000):
        truth = SimilarityTransform2D(
            float(rng.uniform(0.05, 20.0)), float(rng.uniform(-math.pi, math.pi)),
            float(rng.normal(0, 50)), float(rng.normal(0, 50)),
        )
        src = rng.uniform(-10, 10, (10, 2))
        fit = estimate_similarity(src, apply_similarity(truth, src))
        assert abs(fit.scale - truth.scale) < 1e-9 * max(1.0, truth.scale)
        assert abs(math.remainder(fit.theta - truth.theta, 2 * math.pi)) < 1e-9
        assert abs(fit.tx - truth.tx) < 1e-6 and abs(fit.ty - truth.ty) < 1e-6

    hits = 0
    trials = 1000
    for _ in range(trials):
        truth = SimilarityTransform2D(
            float(rng.uniform(0.5, 2.0)), float(rng.uniform(-math.pi, math.pi)),
            float(rng.normal(0, 5)), float(rng.normal(0, 5)),
        )
        src = rng.uniform(-5, 5, (20, 2))
        noisy = apply_similarity(truth, src) + rng.normal(0, 0.01, (20, 2))
        fit = estimate_similarity(src, noisy)
        scale_ok = abs(fit.scale - truth.scale) / truth.scale < 0.01
        theta_ok = abs(math.remainder(fit.theta - truth.theta, 2 * math.pi)) < math.radians(0.5)
        hits += scale_ok and theta_ok
    assert hits / trials >= 0.99, f"only {hits}/{trials} noisy recoveries in tolerance"
    ok(f"transform recovery, noiseless 1e-9 and {hits}/{trials} noisy hits")


def test_end_to_end_synthetic_pipeline(tmp_path):
    started = time.monotonic()
    rng = np.random.default_rng(404)
    dataset = make_scene_dataset(rng, n_scenes=2, n_points=200, n_images=5,
                                 split="test")
    root = tmp_path / "ds"
    export_dataset(dataset, root)
    again = import_dataset(root)

    pred_root = tmp_path / "pred"
    for cset in again.iter_pairs():
        pred = PredictionSet(
            cset.scene_id, cset.plan_id, cset.image_id,
            query_xy=cset.photo_xy, pred_norm=cset.plan_norm,
            confidence=np.ones(len(cset)),
        )
        out = pred_root / cset.scene_id / cset.plan_id
        out.mkdir(parents=True, exist_ok=True)
        write_predictions_text(pred, out / f"{cset.image_id}.c3p")

    report = c3kit.evaluate(again, pred_root, split="test")
    assert report.aggregate_rmse == 0.0
    assert all(fraction == 1.0 for t, fraction in report.pck if t > 0)
    assert report.pr is not None
    assert all(precision == 1.0 for _, precision, _ in report.pr)
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"pipeline took {elapsed:.1f}s"
    ok(f"end-to-end synthetic pipeline, RMSE 0 exactly in {elapsed:.1f}s")


def test_metric_oracles_against_brute_force():
    rng = np.random.default_rng(505)
    from c3kit.correspondence import CorrespondenceSet
    from c3kit.geometry import PlanPose

    for _ in range(100):
        n = int(rng.integers(1, 60))
        photo = rng.uniform(0, 640, (n, 2))
        gt_norm = rng.uniform(0, 1, (n, 2))
        pred_norm = gt_norm + rng.normal(0, 0.05, (n, 2))
        conf = rng.uniform(0, 1, n)
        gt = CorrespondenceSet(
            scene_id="s", plan_id="p", image_id=1,
            photo_xy=photo, plan_xy=gt_norm * 100.0,
            point3d_ids=np.arange(1, n + 1, dtype=np.int64),
            photo_size=(640, 480), plan_size=(100, 100),
            plan_pose=PlanPose((0, 0), 0.0, (0, 0)),
        )
        pred = PredictionSet("s", "p", 1, photo, pred_norm, conf)

        errors = record_errors(pred, gt)
        bf_errors = [
            math.hypot(pred_norm[i][0] - gt.plan_norm[i][0],
                       pred_norm[i][1] - gt.plan_norm[i][1])
            for i in range(n)
        ]
        assert np.abs(errors - np.array(bf_errors)).max() < 1e-12

        bf_rmse = math.sqrt(sum(e * e for e in bf_errors) / n)
        assert abs(rmse(pred, gt) - bf_rmse) < 1e-12

        thresholds = sorted(rng.uniform(0, 0.3, 5))
        for t, fraction in pck(errors, thresholds):
            assert abs(fraction - sum(1 for e in bf_errors if e <= t) / n) < 1e-12

        for t, precision, recall in pr_curve(pred, gt):
            emitted = [i for i in range(n) if conf[i] >= t]
            correct = [i for i in emitted if bf_errors[i] < 0.05]
            bf_precision = len(correct) / len(emitted) if emitted else 1.0
            assert abs(precision - bf_precision) < 1e-12
            assert abs(recall - len(correct) / n) < 1e-12

    # Wilcoxon: exact p equals full enumeration for every n <= 10
    for trial in range(100):
        n = trial % 10 + 1
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        if np.all(a == b):
            continue
        w, p = wilcoxon_signed_rank(a, b, method="exact")
        d = (a - b)[(a - b) != 0]
        ranks = rankdata(np.abs(d))
        w_obs = min(ranks[d > 0].sum(), ranks[d < 0].sum())
        hits = 0
        for signs in itertools.product((1, -1), repeat=len(d)):
            w_plus = sum(r for r, s in zip(ranks, signs) if s > 0)
            if min(w_plus, ranks.sum() - w_plus) <= w_obs + 1e-12:
                hits += 1
        assert w == w_obs
        assert abs(p - hits / 2.0 ** len(d)) < 1e-12

    w, p = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
    assert w == 0.0 and abs(p - 0.0625) < 1e-15  # W+ = 15, p = 2/32
    ok("metric oracles, 100 brute-force instances and exact Wilcoxon")


def test_headline_arithmetic():
    ratio = improvement_ratio(0.1919, 0.2901)
    assert 0.335 <= ratio <= 0.343
    assert round(ratio * 100) == 34
    assert DEFAULT_CORRECT_THRESH == 0.05
    ok(f"headline arithmetic, improvement {ratio:.4f} -> 34%")


def test_sourcing_filters():
    assert infer_scene_name("Plans of Guy's Hospital") == "Guy's Hospital"
    assert infer_scene_name("Blenheim Palace in art") == "Blenheim Palace"
    assert infer_scene_name("Angkor Wat") == "Angkor Wat"

    assert DEFAULT_RADIUS_M == 50.0
    a_center = GeoPoint(1.0, 2.0)
    assert within_radius(a_center, GeoPoint(1.0002, 2.0))  # ~22 m, default radius
    assert not within_radius(a_center, GeoPoint(1.001, 2.0))  # ~111 m

    rng = np.random.default_rng(606)
    checked = 0
    for _ in range(10_000):
        a = GeoPoint(float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180)))
        b = GeoPoint(float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180)))
        lat1, lon1, lat2, lon2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
        cosine = (math.sin(lat1) * math.sin(lat2)
                  + math.cos(lat1) * math.cos(lat2) * math.cos(lon2 - lon1))
        oracle = EARTH_RADIUS_M * math.acos(max(-1.0, min(1.0, cosine)))
        got = haversine_m(a, b)
        assert abs(got - oracle) <= 0.005 * max(oracle, 1.0)
        checked += 1
    assert checked == 10_000
    ok("sourcing filters, 3 name examples and 10k radius oracle checks")


def test_service_durability(tmp_path):
    from c3kit.align_service import AlignmentJournal

    rng = np.random.default_rng(707)
    path = tmp_path / "journal.bin"
    journal = AlignmentJournal(path)
    keys = [("scene", "comp", f"plan{i}") for i in range(10)]
    state = {}
    snapshots = []
    for _ in range(100):
        key = keys[int(rng.integers(0, 10))]
        scale = float(rng.uniform(0.1, 9.0))
        version = journal.put(*key, SimilarityTransform2D(scale, 0.0, 0.0, 0.0))
        state[key] = (version, scale)
        snapshots.append((path.stat().st_size, dict(state)))

    blob = path.read_bytes()
    for size, expected in snapshots:
        for cut in (size, size + 3):  # clean boundary and torn next record
            path.write_bytes(blob[:min(cut, len(blob))])
            reloaded = AlignmentJournal(path)
            served = {k: (r.version, r.similarity.scale)
                      for k, r in reloaded.records().items()}
            assert served == expected

    # optimistic conflicts are deterministic: same stale write, same answer
    path.write_bytes(blob)
    reloaded = AlignmentJournal(path)
    key = keys[0]
    current = reloaded.latest(*key).version
    for _ in range(3):
        with pytest.raises(VersionConflict) as excinfo:
            reloaded.put(*key, SimilarityTransform2D(1.0, 0, 0, 0),
                         expected_version=current - 1)
        assert excinfo.value.current_version == current
    ok("service durability, 100 interleaved puts replayed at 200 cut points")
