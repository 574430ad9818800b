#!/usr/bin/env python3
"""Generate the synthetic fixtures committed under tests/fixtures/.

Everything is seeded, so rerunning this script reproduces the files
byte-for-byte. Three fixtures are produced:

  behavioral_raw.csv   705 survey rows, 21 columns (id + 19 features +
                       class); 218 rows contain at least one blank cell,
                       leaving 487 complete rows.
  landmarks.txt        2940 face records, 263 of them with fewer than 68
                       points (detector failures); 2677 valid records,
                       1337 of class 0 and 1340 of class 1.
  trend.csv(+schema)   3000-row weakly separable numeric dataset for the
                       client-count sweep.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fedscreen.data import Dataset, save_dataset  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

N_BEHAVIORAL = 705
N_BLANK_ROWS = 218
N_FACES = 2940
N_MALFORMED_CLASS0 = 133
N_MALFORMED_CLASS1 = 130


def make_behavioral(rng: np.random.Generator) -> None:
    questions = [f"q{i:02d}" for i in range(1, 11)]
    features = questions + [
        "age_band", "gender", "ethnicity", "jaundice", "family_asd",
        "country", "used_app_before", "relation", "screening_type",
    ]
    header = ["participant_id"] + features + ["class"]
    age_bands = ["4-11", "12-17", "18+"]
    ethnicities = ["White-European", "Asian", "Middle Eastern", "Black", "Latino"]
    countries = ["Jordan", "United States", "Egypt", "United Kingdom", "India"]
    relations = ["Self", "Parent", "Relative", "Health care professional"]
    rows = []
    for i in range(N_BEHAVIORAL):
        is_asd = i % 2 == 0
        # Question answers are weakly predictive of the class.
        p_yes = 0.65 if is_asd else 0.45
        row = [f"P{i:04d}"]
        row += ["Yes" if rng.random() < p_yes else "No" for _ in questions]
        row += [
            str(rng.choice(age_bands)),
            str(rng.choice(["Male", "Female"])),
            str(rng.choice(ethnicities)),
            "Yes" if rng.random() < (0.35 if is_asd else 0.2) else "No",
            "Yes" if rng.random() < (0.3 if is_asd else 0.15) else "No",
            str(rng.choice(countries)),
            str(rng.choice(["Yes", "No"])),
            str(rng.choice(relations)),
            str(rng.choice(["AQ-10-Child", "AQ-10-Adult"])),
        ]
        row.append("Yes" if is_asd else "No")
        rows.append(row)
    blank_rows = rng.choice(N_BEHAVIORAL, size=N_BLANK_ROWS, replace=False)
    for i in blank_rows:
        n_blanks = int(rng.integers(1, 4))
        cols = rng.choice(len(features), size=n_blanks, replace=False)
        for j in cols:
            rows[i][1 + j] = ""
    with open(FIXTURES / "behavioral_raw.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def base_face() -> np.ndarray:
    """A plausible 68-point template centered around (250, 250)."""
    pts = np.zeros((68, 2))
    # Jaw 0-16: lower half-ellipse.
    theta = np.linspace(np.pi, 2 * np.pi, 17)
    pts[0:17, 0] = 250 + 120 * np.cos(theta)
    pts[0:17, 1] = 250 - 140 * np.sin(theta)
    # Brows 17-21 (right) and 22-26 (left): shallow arcs above the eyes.
    for k in range(5):
        pts[17 + k] = (165 + 18 * k, 185 - 6 * np.sin(np.pi * k / 4))
        pts[22 + k] = (263 + 18 * k, 185 - 6 * np.sin(np.pi * k / 4))
    # Nose 27-35: bridge then base.
    for k in range(4):
        pts[27 + k] = (250, 200 + 18 * k)
    for k in range(5):
        pts[31 + k] = (230 + 10 * k, 262)
    # Eyes 36-41 (right) and 42-47 (left): small hexagons.
    eye = np.array([(-18, 0), (-9, -7), (9, -7), (18, 0), (9, 7), (-9, 7)], float)
    pts[36:42] = eye + (192, 210)
    pts[42:48] = eye + (308, 210)
    # Mouth 48-60 and lips 61-67.
    mouth = np.linspace(0, 2 * np.pi, 13, endpoint=False)
    pts[48:61, 0] = 250 + 38 * np.cos(mouth)
    pts[48:61, 1] = 305 + 16 * np.sin(mouth)
    lip = np.linspace(0, 2 * np.pi, 7, endpoint=False)
    pts[61:68, 0] = 250 + 22 * np.cos(lip)
    pts[61:68, 1] = 305 + 8 * np.sin(lip)
    return pts


def make_landmarks(rng: np.random.Generator) -> None:
    template = base_face()
    half = N_FACES // 2
    malformed0 = set(rng.choice(half, size=N_MALFORMED_CLASS0, replace=False))
    malformed1 = set(
        half + rng.choice(half, size=N_MALFORMED_CLASS1, replace=False)
    )
    malformed = malformed0 | malformed1
    lines = []
    for i in range(N_FACES):
        cls = 0 if i < half else 1
        image_id = f"img{i:04d}"
        # Class-dependent width makes the distances weakly informative.
        scale = rng.normal(1.06 if cls == 0 else 1.0, 0.05)
        pts = (template - 250) * max(scale, 0.7) + 250
        pts = pts + rng.normal(0, 2.0, size=pts.shape)
        pts = np.clip(np.round(pts), 0, None).astype(int)
        if i in malformed:
            pts = pts[: int(rng.integers(50, 68))]
        pairs = ",".join(f"{x}:{y}" for x, y in pts)
        lines.append(f"{image_id},{cls},{pairs}")
    (FIXTURES / "landmarks.txt").write_text("\n".join(lines) + "\n")


def make_trend(rng: np.random.Generator) -> None:
    n, m = 3000, 10
    labels = np.repeat([0, 1], n // 2)
    direction = rng.normal(size=m)
    direction /= np.linalg.norm(direction)
    rows = rng.normal(0, 1.0, size=(n, m))
    rows += np.outer(np.where(labels == 0, -1.0, 1.0), direction) * 0.9
    order = rng.permutation(n)
    dataset = Dataset(
        feature_names=[f"f{j:02d}" for j in range(m)],
        rows=np.round(rows[order], 6),
        labels=labels[order],
    )
    save_dataset(dataset, FIXTURES / "trend.csv")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_behavioral(np.random.default_rng(20240817))
    make_landmarks(np.random.default_rng(20240818))
    make_trend(np.random.default_rng(20240819))
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
