import math

import numpy as np
import pytest

from fedscreen.errors import InputError
from fedscreen.landmarks import (
    LandmarkSet,
    euclidean,
    extract_all,
    extract_distances,
    parse_landmarks,
    region_anchor,
)


def make_face(points=None, image_id="face", class_label=0):
    if points is None:
        points = np.tile([100.0, 100.0], (68, 1))
    return LandmarkSet(image_id=image_id, class_label=class_label, points=points)


def face_line(image_id, cls, points):
    pairs = ",".join(f"{x}:{y}" for x, y in points)
    return f"{image_id},{cls},{pairs}"


def grid_points(n=68):
    return [(float(i), float(i % 7)) for i in range(n)]


class TestParse:
    def test_three_valid_records(self, tmp_path):
        p = tmp_path / "lm.txt"
        p.write_text(
            "\n".join(face_line(f"img{i}", i % 2, grid_points()) for i in range(3))
            + "\n"
        )
        records, skipped = parse_landmarks(p)
        assert len(records) == 3 and skipped == []
        assert records[0].image_id == "img0"

    def test_short_record_skipped_with_report(self, tmp_path):
        p = tmp_path / "lm.txt"
        p.write_text(
            face_line("good", 0, grid_points())
            + "\n"
            + face_line("bad", 1, grid_points(60))
            + "\n"
        )
        records, skipped = parse_landmarks(p)
        assert len(records) == 1
        assert len(skipped) == 1 and "bad" in skipped[0] and "60" in skipped[0]

    def test_empty_file(self, tmp_path):
        p = tmp_path / "lm.txt"
        p.write_text("")
        assert parse_landmarks(p) == ([], [])

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            parse_landmarks(tmp_path / "nope.txt")

    def test_unparseable_coordinates_skipped(self, tmp_path):
        p = tmp_path / "lm.txt"
        bad = "img0,0," + ",".join("a:b" for _ in range(68))
        p.write_text(bad + "\n")
        records, skipped = parse_landmarks(p)
        assert records == [] and len(skipped) == 1

    def test_fixture_counts(self, landmarks_file):
        records, skipped = parse_landmarks(landmarks_file)
        assert len(records) == 2677
        assert len(skipped) == 263


class TestEuclidean:
    def test_3_4_5(self):
        assert euclidean((0, 0), (3, 4)) == 5.0

    def test_identity(self):
        assert euclidean((7, 2), (7, 2)) == 0.0

    def test_hand_case(self):
        assert euclidean((1, 1), (4, 5)) == 5.0

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            euclidean((float("nan"), 0), (1, 1))

    @pytest.mark.parametrize("seed", range(10))
    def test_metric_properties(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.uniform(0, 100, size=(3, 2))
        assert euclidean(a, b) == euclidean(b, a)
        assert euclidean(a, b) >= 0
        assert euclidean(a, a) == 0
        assert euclidean(a, c) <= euclidean(a, b) + euclidean(b, c) + 1e-9


class TestRegionAnchor:
    def test_right_brow_is_point_19(self):
        pts = np.array(grid_points())
        face = make_face(pts)
        assert (region_anchor(face, "right_brow") == pts[19]).all()

    def test_left_brow_is_point_24(self):
        pts = np.array(grid_points())
        assert (region_anchor(make_face(pts), "left_brow") == pts[24]).all()

    def test_right_eye_centroid_of_identical_points(self):
        pts = np.array(grid_points())
        pts[36:42] = (10.0, 10.0)
        assert (region_anchor(make_face(pts), "right_eye") == (10.0, 10.0)).all()

    def test_nose_centroid_of_collinear_points(self):
        pts = np.array(grid_points())
        pts[27:36] = [(float(i), float(i)) for i in range(9)]
        assert (region_anchor(make_face(pts), "nose") == (4.0, 4.0)).all()

    def test_unknown_region(self):
        with pytest.raises(InputError):
            region_anchor(make_face(), "chin")


class TestExtractDistances:
    def test_brow_distance_by_hand(self):
        pts = np.array(grid_points(), dtype=float)
        pts[19] = (40.0, 50.0)
        pts[24] = (80.0, 50.0)
        features = extract_distances(make_face(pts))
        assert features.brow_distance == 40.0

    def test_mirrored_face_keeps_distances(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(10, 400, size=(68, 2))
        face = make_face(pts)
        mirrored = pts.copy()
        mirrored[:, 0] = 500.0 - mirrored[:, 0]
        # mirroring about a vertical axis swaps left/right point roles but
        # preserves all pairwise distances
        mirror_face = make_face(mirrored)
        a = extract_distances(face)
        b = extract_distances(mirror_face)
        assert a.brow_distance == pytest.approx(b.brow_distance, abs=1e-9)
        assert a.eye_distance == pytest.approx(b.eye_distance, abs=1e-9)
        assert a.nose_lips_distance == pytest.approx(b.nose_lips_distance, abs=1e-9)

    def test_coincident_points_give_zero(self):
        features = extract_distances(make_face())
        assert (features.brow_distance, features.eye_distance,
                features.nose_lips_distance) == (0.0, 0.0, 0.0)

    def test_class_label_copied(self):
        face = make_face(class_label=1)
        assert extract_distances(face).class_label == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_translation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(50, 300, size=(68, 2))
        dx, dy = rng.uniform(0, 40, size=2)
        a = extract_distances(make_face(pts))
        b = extract_distances(make_face(pts + (dx, dy)))
        for name in ("brow_distance", "eye_distance", "nose_lips_distance"):
            assert math.isclose(getattr(a, name), getattr(b, name), abs_tol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_scale_linearity(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(10, 200, size=(68, 2))
        s = rng.uniform(0.5, 3.0)
        a = extract_distances(make_face(pts))
        b = extract_distances(make_face(pts * s))
        for name in ("brow_distance", "eye_distance", "nose_lips_distance"):
            assert math.isclose(getattr(b, name), s * getattr(a, name),
                                rel_tol=1e-12, abs_tol=1e-9)

    def test_batch_extraction_counts(self, tmp_path):
        lines = [face_line(f"v{i}", 0, grid_points()) for i in range(4)]
        lines += [face_line(f"m{i}", 1, grid_points(55)) for i in range(3)]
        p = tmp_path / "lm.txt"
        p.write_text("\n".join(lines) + "\n")
        records, skipped = parse_landmarks(p)
        features = extract_all(records)
        assert len(features) == 4 and len(skipped) == 3
        assert [f.image_id for f in features] == [f"v{i}" for i in range(4)]


class TestLandmarkSetValidation:
    def test_wrong_point_count(self):
        with pytest.raises(InputError):
            LandmarkSet(image_id="x", class_label=0, points=np.zeros((60, 2)))

    def test_negative_coordinates(self):
        pts = np.zeros((68, 2))
        pts[3] = (-1.0, 5.0)
        with pytest.raises(InputError):
            LandmarkSet(image_id="x", class_label=0, points=pts)

    def test_nonfinite_coordinates(self):
        pts = np.zeros((68, 2))
        pts[3] = (np.inf, 5.0)
        with pytest.raises(InputError):
            LandmarkSet(image_id="x", class_label=0, points=pts)
