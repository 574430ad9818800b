"""68-point facial landmark records and the three facial-distance features.

The landmark template follows the common 68-point layout: jaw 0-16, right
brow 17-21, left brow 22-26, nose 27-35, right eye 36-41, left eye 42-47,
mouth 48-60, lips 61-67. From each face we compute three euclidean
distances: brow-to-brow, eye-to-eye, and nose-to-lips; those are the
features merged with the behavioral data.

Landmark file format (one record per line):
    image_id,class_label,x0:y0,x1:y1,...,x67:y67
Records without exactly 68 valid points are skipped and reported, mirroring
faces a detector failed to resolve.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

N_POINTS = 68

# Anchor definitions: brows use the template's named midpoint indices;
# the other regions use the centroid of their template index range.
BROW_RIGHT_POINT = 19
BROW_LEFT_POINT = 24
REGION_POINTS = {
    "right_brow": (BROW_RIGHT_POINT,),
    "left_brow": (BROW_LEFT_POINT,),
    "right_eye": tuple(range(36, 42)),
    "left_eye": tuple(range(42, 48)),
    "nose": tuple(range(27, 36)),
    "lips": tuple(range(61, 68)),
}


@dataclass(frozen=True)
class LandmarkSet:
    """All 68 template points for one face image."""

    image_id: str
    class_label: int
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.shape != (N_POINTS, 2):
            raise InputError(
                f"{self.image_id}: expected {N_POINTS} points, got shape {points.shape}"
            )
        if not np.isfinite(points).all():
            raise InputError(f"{self.image_id}: non-finite coordinates")
        if (points < 0).any():
            raise InputError(f"{self.image_id}: negative pixel coordinates")
        if self.class_label not in (0, 1):
            raise InputError(f"{self.image_id}: class label must be 0 or 1")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)


@dataclass(frozen=True)
class DistanceFeatures:
    """The three facial distances for one face image, in pixels."""

    image_id: str
    class_label: int
    brow_distance: float
    eye_distance: float
    nose_lips_distance: float

    def __post_init__(self):
        for name in ("brow_distance", "eye_distance", "nose_lips_distance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InputError(f"{self.image_id}: {name}={v} must be finite and >= 0")


def euclidean(a, b) -> float:
    """Plain 2-D euclidean distance sqrt((x2-x1)^2 + (y2-y1)^2)."""
    (x1, y1), (x2, y2) = (float(a[0]), float(a[1])), (float(b[0]), float(b[1]))
    if not all(math.isfinite(v) for v in (x1, y1, x2, y2)):
        raise InputError("non-finite coordinates")
    return math.hypot(x2 - x1, y2 - y1)


def region_anchor(landmarks: LandmarkSet, region: str) -> np.ndarray:
    """Midpoint of a facial region: a named template point for the brows,
    the centroid of the region's index range otherwise."""
    if region not in REGION_POINTS:
        raise InputError(f"unknown region {region!r}; one of {sorted(REGION_POINTS)}")
    idx = list(REGION_POINTS[region])
    return landmarks.points[idx].mean(axis=0)


def extract_distances(landmarks: LandmarkSet) -> DistanceFeatures:
    """Compute the brow, eye, and nose-lips distances for one face."""
    return DistanceFeatures(
        image_id=landmarks.image_id,
        class_label=landmarks.class_label,
        brow_distance=euclidean(
            region_anchor(landmarks, "right_brow"), region_anchor(landmarks, "left_brow")
        ),
        eye_distance=euclidean(
            region_anchor(landmarks, "right_eye"), region_anchor(landmarks, "left_eye")
        ),
        nose_lips_distance=euclidean(
            region_anchor(landmarks, "nose"), region_anchor(landmarks, "lips")
        ),
    )


def extract_all(landmark_sets) -> list[DistanceFeatures]:
    """Batch extraction, output ordered as the input records."""
    return [extract_distances(l) for l in landmark_sets]


def parse_landmarks(path) -> tuple[list[LandmarkSet], list[str]]:
    """Parse a landmark coordinate file.

    Returns (valid records, skip reports). A record is skipped, not fatal,
    when it does not carry exactly 68 parseable points; the report names the
    record so drops are auditable.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    records: list[LandmarkSet] = []
    skipped: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) < 2:
                skipped.append(f"line {line_no}: unparseable record")
                continue
            image_id = fields[0].strip()
            try:
                class_label = int(fields[1])
                points = []
                for pair in fields[2:]:
                    x, y = pair.split(":")
                    points.append((float(x), float(y)))
            except ValueError:
                skipped.append(f"{image_id} (line {line_no}): malformed coordinates")
                continue
            if len(points) != N_POINTS:
                skipped.append(
                    f"{image_id} (line {line_no}): {len(points)} points, "
                    f"expected {N_POINTS}"
                )
                continue
            try:
                records.append(
                    LandmarkSet(image_id=image_id, class_label=class_label, points=points)
                )
            except InputError as exc:
                skipped.append(f"{image_id} (line {line_no}): {exc}")
    return records, skipped


def write_distances_csv(features, path) -> None:
    """Write distance records as CSV: image_id, class, three distances."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["image_id", "class", "brow_distance", "eye_distance", "nose_lips_distance"]
        )
        for rec in features:
            writer.writerow(
                [
                    rec.image_id,
                    rec.class_label,
                    repr(rec.brow_distance),
                    repr(rec.eye_distance),
                    repr(rec.nose_lips_distance),
                ]
            )


def read_distances_csv(path) -> list[DistanceFeatures]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"image_id", "class", "brow_distance", "eye_distance",
                    "nose_lips_distance"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InputError(f"{path}: missing distance CSV columns")
        for row in reader:
            records.append(
                DistanceFeatures(
                    image_id=row["image_id"],
                    class_label=int(row["class"]),
                    brow_distance=float(row["brow_distance"]),
                    eye_distance=float(row["eye_distance"]),
                    nose_lips_distance=float(row["nose_lips_distance"]),
                )
            )
    return records
