import numpy as np
import pytest

from c3kit.correspondence import CorrespondenceSet
from c3kit.dataset import (
    Dataset,
    FloorPlan,
    SceneManifest,
    compute_stats,
    datasets_equal,
    export_dataset,
    holdout_validation_pairs,
    import_dataset,
    split_scenes,
)
from c3kit.dataset.blob import read_records, write_records
from c3kit.errors import ChecksumFailure, EmptyInput, VersionMismatch
from c3kit.geometry import PlanPose
from c3kit.synthetic import make_scene_dataset


def bare_pair(scene_id, plan_id, image_id, n, rng, plan_size=(200, 100)):
    pose = PlanPose((10.0, 20.0), 0.5, (10.0 / plan_size[0], 20.0 / plan_size[1]))
    return CorrespondenceSet(
        scene_id=scene_id, plan_id=plan_id, image_id=image_id,
        photo_xy=rng.uniform(0, 100, (n, 2)).astype(np.float32).astype(np.float64),
        plan_xy=rng.uniform(0, 100, (n, 2)).astype(np.float32).astype(np.float64),
        point3d_ids=np.arange(1, n + 1, dtype=np.int64),
        photo_size=(640, 480), plan_size=plan_size, plan_pose=pose,
    )


def tiny_dataset(rng, pair_sizes=((3,), (5,))) -> Dataset:
    dataset = Dataset()
    for s, sizes in enumerate(pair_sizes):
        scene_id = f"s{s}"
        dataset.add_scene(SceneManifest(
            scene_id=scene_id,
            floor_plans=[FloorPlan("p0", "missing.png", 200, 100)],
        ))
        for i, n in enumerate(sizes):
            dataset.add_pair(bare_pair(scene_id, "p0", i + 1, n, rng))
    return dataset


class TestSplits:
    def test_single_scene_deterministic(self):
        first = split_scenes(["only"], seed=3, test_fraction=0.2)
        assert first["only"] in ("train", "test")
        for _ in range(5):
            assert split_scenes(["only"], seed=3, test_fraction=0.2) == first

    def test_share_close_to_fraction(self):
        ids = [f"scene_{i}" for i in range(1000)]
        for seed in (0, 1, 99):
            assignment = split_scenes(ids, seed=seed, test_fraction=0.2)
            share = sum(1 for v in assignment.values() if v == "test") / len(ids)
            assert 0.15 <= share <= 0.25

    def test_partition_is_exact(self):
        ids = [f"scene_{i}" for i in range(50)]
        assignment = split_scenes(ids, seed=7, test_fraction=0.3)
        train = {k for k, v in assignment.items() if v == "train"}
        test = {k for k, v in assignment.items() if v == "test"}
        assert train | test == set(ids)
        assert train & test == set()

    def test_override_wins(self):
        ids = [f"scene_{i}" for i in range(20)]
        assignment = split_scenes(ids, seed=0, test_fraction=0.01,
                                  overrides={"scene_3": "test"})
        assert assignment["scene_3"] == "test"

    def test_seed_changes_assignment(self):
        ids = [f"scene_{i}" for i in range(200)]
        a = split_scenes(ids, seed=0, test_fraction=0.5)
        b = split_scenes(ids, seed=1, test_fraction=0.5)
        assert a != b

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            split_scenes([], seed=0, test_fraction=0.2)

    def test_pair_level_validation_holdout(self):
        keys = [("s0", "p0", i) for i in range(500)]
        held = holdout_validation_pairs(keys, seed=1, fraction=0.1)
        assert held == holdout_validation_pairs(keys, seed=1, fraction=0.1)
        assert 0.05 <= len(held) / len(keys) <= 0.15


class TestStats:
    def test_empty_dataset(self):
        stats = compute_stats(Dataset())
        assert stats.scene_count == 0
        assert stats.total_correspondences == 0
        assert stats.min_per_pair is None and stats.max_per_pair is None

    def test_two_scene_example(self, rng):
        stats = compute_stats(tiny_dataset(rng))
        assert stats.scene_count == 2
        assert stats.pair_count == 2
        assert stats.total_correspondences == 8
        assert (stats.min_per_pair, stats.max_per_pair) == (3, 5)
        assert stats.mean_per_pair == pytest.approx(4.0)
        assert stats.photo_count == stats.pose_count == 2

    def test_additivity_over_scene_partition(self, rng):
        dataset = make_scene_dataset(rng, n_scenes=4)
        ids = sorted(dataset.scenes)
        half_a, half_b = ids[:2], ids[2:]

        def restrict(subset):
            out = Dataset()
            for sid in subset:
                out.scenes[sid] = dataset.scenes[sid]
            for key, cset in dataset.pair_sets.items():
                if key[0] in subset:
                    out.pair_sets[key] = cset
            return out

        merged = compute_stats(restrict(half_a)).merge(compute_stats(restrict(half_b)))
        assert merged == compute_stats(dataset)


class TestBlob:
    def test_round_trip_bit_equal(self, tmp_path, rng):
        n = 1000
        photo = rng.uniform(0, 640, (n, 2)).astype(np.float32).astype(np.float64)
        plan = rng.uniform(0, 400, (n, 2)).astype(np.float32).astype(np.float64)
        ids = rng.integers(1, 10**12, n)
        idx = np.arange(n)
        path = tmp_path / "pair.c3c"
        write_records(path, photo, plan, ids, idx)
        photo2, plan2, ids2, idx2 = read_records(path)
        assert np.array_equal(photo, photo2)
        assert np.array_equal(plan, plan2)
        assert np.array_equal(ids, ids2)
        assert np.array_equal(idx, idx2)

    def test_truncation_detected(self, tmp_path, rng):
        path = tmp_path / "pair.c3c"
        write_records(path, np.zeros((4, 2)), np.zeros((4, 2)),
                      np.arange(4), np.arange(4))
        blob = path.read_bytes()
        path.write_bytes(blob[:-1])
        with pytest.raises(ChecksumFailure):
            read_records(path)

    def test_payload_corruption_detected(self, tmp_path):
        path = tmp_path / "pair.c3c"
        write_records(path, np.ones((4, 2)), np.ones((4, 2)),
                      np.arange(4), np.arange(4))
        blob = bytearray(path.read_bytes())
        blob[30] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ChecksumFailure):
            read_records(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "pair.c3c"
        write_records(path, np.ones((1, 2)), np.ones((1, 2)), [1], [0])
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(bytes(blob))
        with pytest.raises(VersionMismatch):
            read_records(path)


class TestStore:
    def test_import_export_round_trip(self, tmp_path, rng):
        dataset = tiny_dataset(rng)
        export_dataset(dataset, tmp_path / "ds")
        again = import_dataset(tmp_path / "ds")
        assert datasets_equal(dataset, again)

    def test_derived_dataset_round_trip(self, tmp_path, rng):
        dataset = make_scene_dataset(rng, n_scenes=2)
        export_dataset(dataset, tmp_path / "ds")
        once = import_dataset(tmp_path / "ds")
        export_dataset(once, tmp_path / "ds2")
        twice = import_dataset(tmp_path / "ds2")
        assert datasets_equal(once, twice)

    def test_manifest_version_checked(self, tmp_path, rng):
        export_dataset(tiny_dataset(rng), tmp_path / "ds")
        manifest = tmp_path / "ds" / "manifest.json"
        manifest.write_text(manifest.read_text().replace('"version": 1', '"version": 9'))
        with pytest.raises(VersionMismatch):
            import_dataset(tmp_path / "ds")

    def test_blob_truncation_surfaces_on_import(self, tmp_path, rng):
        export_dataset(tiny_dataset(rng), tmp_path / "ds")
        blob = next((tmp_path / "ds" / "scenes").rglob("*.c3c"))
        blob.write_bytes(blob.read_bytes()[:-1])
        with pytest.raises(ChecksumFailure):
            import_dataset(tmp_path / "ds")

    def test_large_export_bit_equal(self, tmp_path, rng):
        n = 100_000
        dataset = Dataset()
        dataset.add_scene(SceneManifest(
            scene_id="big",
            floor_plans=[FloorPlan("p0", "missing.png", 1000, 800)],
        ))
        pose = PlanPose((1.0, 2.0), 0.0, (0.001, 0.0025))
        cset = CorrespondenceSet(
            scene_id="big", plan_id="p0", image_id=1,
            photo_xy=rng.uniform(0, 640, (n, 2)).astype(np.float32).astype(np.float64),
            plan_xy=rng.uniform(0, 1000, (n, 2)).astype(np.float32).astype(np.float64),
            point3d_ids=np.arange(n, dtype=np.int64),
            photo_size=(640, 480), plan_size=(1000, 800), plan_pose=pose,
        )
        dataset.add_pair(cset)
        export_dataset(dataset, tmp_path / "ds")
        again = import_dataset(tmp_path / "ds")
        got = again.pair_sets[("big", "p0", 1)]
        assert np.array_equal(got.photo_xy, cset.photo_xy)
        assert np.array_equal(got.plan_xy, cset.plan_xy)
