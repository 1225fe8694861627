import struct

import numpy as np
import pytest

from c3kit.colmap_io import (
    CameraIntrinsics,
    ImagePose,
    ScenePoint,
    SparseModel,
    _write_cameras_binary,
    _write_images_binary,
    _write_points_binary,
    models_equal,
    parse_model,
    validate_model,
    write_model,
)
from c3kit.errors import (
    IntegrityError,
    MalformedText,
    MissingFile,
    TruncatedFile,
    UnsupportedModelInText,
)
from c3kit.synthetic import make_random_model


def write_unchecked(model, dir_path):
    """Write binary files without the validation pass, for injection tests."""
    dir_path.mkdir(parents=True, exist_ok=True)
    _write_cameras_binary(model.cameras, dir_path / "cameras.bin")
    _write_images_binary(model.images, dir_path / "images.bin")
    _write_points_binary(model.points, dir_path / "points3D.bin")


def hand_built_files(tmp_path):
    """One SIMPLE_PINHOLE camera, one identity-pose image with one
    observation, one point; bytes assembled from the format table by hand."""
    cameras = struct.pack("<Q", 1)
    cameras += struct.pack("<IIQQ", 1, 0, 640, 480)
    cameras += struct.pack("<ddd", 100.0, 50.0, 50.0)

    images = struct.pack("<Q", 1)
    images += struct.pack("<I", 1)
    images += struct.pack("<dddd", 1.0, 0.0, 0.0, 0.0)
    images += struct.pack("<ddd", 0.0, 0.0, 0.0)
    images += struct.pack("<I", 1)
    images += b"photo.jpg\x00"
    images += struct.pack("<Q", 1)
    images += struct.pack("<ddQ", 12.5, 34.25, 7)

    points = struct.pack("<Q", 1)
    points += struct.pack("<Q", 7)
    points += struct.pack("<ddd", 0.1, 0.2, 1.0)
    points += struct.pack("<BBB", 10, 20, 30)
    points += struct.pack("<d", 0.5)
    points += struct.pack("<Q", 1)
    points += struct.pack("<II", 1, 0)

    (tmp_path / "cameras.bin").write_bytes(cameras)
    (tmp_path / "images.bin").write_bytes(images)
    (tmp_path / "points3D.bin").write_bytes(points)


def test_parse_hand_built_binary(tmp_path):
    hand_built_files(tmp_path)
    model = parse_model(tmp_path, "binary")

    cam = model.cameras[1]
    assert cam.model_name == "SIMPLE_PINHOLE"
    assert (cam.width, cam.height) == (640, 480)
    assert cam.params.tolist() == [100.0, 50.0, 50.0]

    img = model.images[1]
    assert img.qvec.tolist() == [1.0, 0.0, 0.0, 0.0]
    assert img.tvec.tolist() == [0.0, 0.0, 0.0]
    assert img.name == "photo.jpg"
    assert img.xys.tolist() == [[12.5, 34.25]]
    assert img.point3d_ids.tolist() == [7]

    pt = model.points[7]
    assert pt.xyz.tolist() == [0.1, 0.2, 1.0]
    assert pt.rgb.tolist() == [10, 20, 30]
    assert pt.error == 0.5
    assert pt.track.tolist() == [[1, 0]]


def test_parse_hand_built_binary_rewrites_byte_identical(tmp_path):
    hand_built_files(tmp_path)
    model = parse_model(tmp_path, "binary")
    out = tmp_path / "rewrite"
    write_model(model, out, "binary")
    for name in ("cameras.bin", "images.bin", "points3D.bin"):
        assert (out / name).read_bytes() == (tmp_path / name).read_bytes()


def test_empty_model(tmp_path):
    for name in ("cameras.bin", "images.bin", "points3D.bin"):
        (tmp_path / name).write_bytes(struct.pack("<Q", 0))
    model = parse_model(tmp_path)
    assert model.cameras == {} and model.images == {} and model.points == {}


def test_dangling_observation_reports_id(tmp_path, rng):
    model = make_random_model(rng, n_points=20, n_images=2)
    img = next(iter(model.images.values()))
    target = int(np.flatnonzero(img.point3d_ids >= 0)[0])
    img.point3d_ids[target] = 424242
    write_unchecked(model, tmp_path)
    with pytest.raises(IntegrityError, match="424242"):
        parse_model(tmp_path)


@pytest.mark.parametrize("format", ["binary", "text"])
def test_round_trip(tmp_path, rng, format):
    model = make_random_model(rng, n_points=200, n_images=5)
    write_model(model, tmp_path, format)
    again = parse_model(tmp_path, format)
    assert models_equal(model, again)


def test_write_is_deterministic(tmp_path, rng):
    model = make_random_model(rng, n_points=50)
    write_model(model, tmp_path / "a", "binary")
    write_model(model, tmp_path / "b", "binary")
    for name in ("cameras.bin", "images.bin", "points3D.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_thousand_points_binary_bit_equal(tmp_path, rng):
    model = make_random_model(rng, n_points=1000, n_images=6)
    write_model(model, tmp_path, "binary")
    again = parse_model(tmp_path, "binary")
    for pid, pt in model.points.items():
        assert np.array_equal(pt.xyz, again.points[pid].xyz)


def test_truncated_binary(tmp_path, rng):
    model = make_random_model(rng, n_points=30)
    write_model(model, tmp_path, "binary")
    blob = (tmp_path / "points3D.bin").read_bytes()
    (tmp_path / "points3D.bin").write_bytes(blob[:-3])
    with pytest.raises(TruncatedFile):
        parse_model(tmp_path)


def test_trailing_garbage_binary(tmp_path, rng):
    model = make_random_model(rng, n_points=5)
    write_model(model, tmp_path, "binary")
    with open(tmp_path / "cameras.bin", "ab") as fh:
        fh.write(b"\x00\x01")
    with pytest.raises(TruncatedFile):
        parse_model(tmp_path)


def test_missing_file(tmp_path, rng):
    model = make_random_model(rng, n_points=5)
    write_model(model, tmp_path, "binary")
    (tmp_path / "images.bin").unlink()
    with pytest.raises(MissingFile):
        parse_model(tmp_path, "binary")
    with pytest.raises(MissingFile):
        parse_model(tmp_path / "nope_subdir", "auto")


def test_malformed_text_reports_line_and_column(tmp_path, rng):
    model = make_random_model(rng, n_points=5, n_images=1)
    write_model(model, tmp_path, "text")
    lines = (tmp_path / "cameras.txt").read_text().splitlines()
    lines[1] = lines[1].replace("SIMPLE", "BOGUS", 1).replace("PINHOLE", "MODEL", 1)
    (tmp_path / "cameras.txt").write_text("\n".join(lines) + "\n")
    with pytest.raises(MalformedText) as excinfo:
        parse_model(tmp_path, "text")
    assert excinfo.value.line == 2
    assert excinfo.value.column is not None


def test_text_comments_ignored(tmp_path, rng):
    model = make_random_model(rng, n_points=5, n_images=1)
    write_model(model, tmp_path, "text")
    body = (tmp_path / "points3D.txt").read_text()
    (tmp_path / "points3D.txt").write_text("# a comment\n\n" + body)
    assert models_equal(parse_model(tmp_path, "text"), model)


def test_unsupported_camera_model_binary_round_trip(tmp_path):
    # model id 5 (known arity, unsupported for projection) survives binary io
    cam = CameraIntrinsics(1, 5, 640, 480, np.array([400.0, 400.0, 320.0, 240.0,
                                                     0.1, 0.0, 0.0, 0.0]))
    model = SparseModel(cameras={1: cam})
    write_model(model, tmp_path, "binary")
    again = parse_model(tmp_path)
    assert again.cameras[1].model_name == "UNSUPPORTED"
    assert not again.cameras[1].is_supported
    assert np.array_equal(again.cameras[1].params, cam.params)
    with pytest.raises(UnsupportedModelInText):
        write_model(model, tmp_path, "text")


def test_unknown_binary_model_id_rejected(tmp_path):
    blob = struct.pack("<Q", 1) + struct.pack("<IIQQ", 1, 99, 640, 480)
    (tmp_path / "cameras.bin").write_bytes(blob)
    (tmp_path / "images.bin").write_bytes(struct.pack("<Q", 0))
    (tmp_path / "points3D.bin").write_bytes(struct.pack("<Q", 0))
    with pytest.raises(TruncatedFile, match="99"):
        parse_model(tmp_path)


def test_qvec_normalized_within_tolerance(tmp_path, rng):
    model = make_random_model(rng, n_points=5, n_images=1)
    img = model.images[1]
    skew = img.qvec * (1.0 + 5e-5)  # within renormalization band
    model.images[1] = img._replace(qvec=skew)
    write_unchecked(model, tmp_path)
    again = parse_model(tmp_path)
    assert abs(np.linalg.norm(again.images[1].qvec) - 1.0) < 1e-6


def test_qvec_corrupt_rejected(tmp_path, rng):
    model = make_random_model(rng, n_points=5, n_images=1)
    img = model.images[1]
    model.images[1] = img._replace(qvec=img.qvec * 1.5)
    write_unchecked(model, tmp_path)
    with pytest.raises(IntegrityError, match="quaternion"):
        parse_model(tmp_path)


class TestValidationCompleteness:
    """Every flavor of single dangling reference must be caught."""

    def _valid(self, rng):
        model = make_random_model(rng, n_points=30, n_images=3)
        validate_model(model)
        return model

    def test_dangling_camera(self, rng, tmp_path):
        model = self._valid(rng)
        img = model.images[1]
        model.images[1] = img._replace(camera_id=999)
        write_unchecked(model, tmp_path)
        with pytest.raises(IntegrityError, match="999"):
            parse_model(tmp_path)

    def test_track_missing_image(self, rng, tmp_path):
        model = self._valid(rng)
        pid, pt = next((k, p) for k, p in model.points.items() if len(p.track))
        track = pt.track.copy()
        track[0, 0] = 777
        model.points[pid] = pt._replace(track=track)
        write_unchecked(model, tmp_path)
        with pytest.raises(IntegrityError, match="777"):
            parse_model(tmp_path)

    def test_track_bad_observation_index(self, rng, tmp_path):
        model = self._valid(rng)
        pid, pt = next((k, p) for k, p in model.points.items() if len(p.track))
        track = pt.track.copy()
        track[0, 1] = 10_000
        model.points[pid] = pt._replace(track=track)
        write_unchecked(model, tmp_path)
        with pytest.raises(IntegrityError, match="10000"):
            parse_model(tmp_path)

    def test_track_points_at_wrong_observation(self, rng, tmp_path):
        model = self._valid(rng)
        pid, pt = next((k, p) for k, p in model.points.items() if len(p.track))
        image_id = int(pt.track[0, 0])
        img = model.images[image_id]
        # find an observation in the same image holding a different id
        other = next(
            i for i, v in enumerate(img.point3d_ids) if v != pid
        )
        track = pt.track.copy()
        track[0, 1] = other
        model.points[pid] = pt._replace(track=track)
        write_unchecked(model, tmp_path)
        with pytest.raises(IntegrityError):
            parse_model(tmp_path)

    def test_negative_error(self, rng):
        model = self._valid(rng)
        pid, pt = next(iter(model.points.items()))
        model.points[pid] = pt._replace(error=-1.0)
        with pytest.raises(IntegrityError, match="negative"):
            validate_model(model)
