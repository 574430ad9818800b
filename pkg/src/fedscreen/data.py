"""Tabular dataset ingestion, preprocessing, synthesis, merging, and splitting.

The pipeline goes: CSV file -> RawTable (strings) -> drop_missing ->
encode_categorical -> Dataset (numeric). Downstream helpers partition a
Dataset across simulated clients, split it into train/test, or plan k-fold
cross-validation. Everything is a pure function of (inputs, seed).

Class convention throughout: 0 = ASD, 1 = non-ASD.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .landmarks import DistanceFeatures

CLASS_ASD = 0
CLASS_NON_ASD = 1

# Accepted spellings for the two label classes, compared case-insensitively.
_LABEL_CODES = {
    "yes": CLASS_ASD,
    "asd": CLASS_ASD,
    "0": CLASS_ASD,
    "no": CLASS_NON_ASD,
    "non-asd": CLASS_NON_ASD,
    "1": CLASS_NON_ASD,
}

DISTANCE_FEATURE_NAMES = ("brow_distance", "eye_distance", "nose_lips_distance")


@dataclass(frozen=True)
class RawTable:
    """A parsed CSV before encoding: all cells kept as strings."""

    feature_names: list[str]
    rows: list[list[str]]
    labels: list[str]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class Dataset:
    """Numeric feature matrix with binary labels and category code tables.

    `encodings` maps feature name -> {original string -> integer code} for
    features that went through categorical encoding; purely numeric features
    (e.g. facial distances) have no entry.
    """

    feature_names: list[str]
    rows: np.ndarray
    labels: np.ndarray
    encodings: dict[str, dict[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if rows.ndim != 2:
            raise InputError(f"rows must be 2-D, got shape {rows.shape}")
        if labels.shape != (rows.shape[0],):
            raise InputError(
                f"labels length {labels.shape} does not match {rows.shape[0]} rows"
            )
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise InputError("labels must contain only 0 or 1")
        for name, codes in self.encodings.items():
            if len(set(codes.values())) != len(codes):
                raise InputError(f"encoding for feature {name!r} is not injective")
        rows.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            feature_names=self.feature_names,
            rows=self.rows[indices],
            labels=self.labels[indices],
            encodings=self.encodings,
        )

    def decode_feature(self, name: str) -> list[str]:
        """Map a categorical feature's codes back to the original strings."""
        if name not in self.encodings:
            raise InputError(f"feature {name!r} has no categorical encoding")
        j = self.feature_names.index(name)
        inverse = {code: text for text, code in self.encodings[name].items()}
        return [inverse[int(v)] for v in self.rows[:, j]]


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def __post_init__(self):
        assignments = np.asarray(self.assignments, dtype=np.int64)
        sizes = np.bincount(assignments, minlength=self.k)
        if sizes.max() - sizes.min() > 1:
            raise InputError("fold sizes differ by more than 1")
        assignments.setflags(write=False)
        object.__setattr__(self, "assignments", assignments)

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def rest_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def load_csv(path, label_column: str) -> RawTable:
    """Read a UTF-8 comma-separated file into a RawTable.

    The first row is the header; the label column is removed from the
    features. Cells are kept as raw strings so that missing-value dropping
    and categorical encoding can run later. Ragged rows are an error and are
    reported with their (1-based, header included) row number.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file, header row required") from None
        if label_column not in header:
            raise InputError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels = [], []
        for row_no, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise InputError(
                    f"{path}: row {row_no} has {len(record)} fields, "
                    f"expected {len(header)}"
                )
            labels.append(record[label_idx])
            rows.append([v for i, v in enumerate(record) if i != label_idx])
    return RawTable(feature_names=feature_names, rows=rows, labels=labels)


def drop_missing(table: RawTable) -> RawTable:
    """Drop every row containing an empty cell (features or label)."""
    keep = [
        i
        for i in range(table.n_rows)
        if table.labels[i].strip() != ""
        and all(cell.strip() != "" for cell in table.rows[i])
    ]
    return RawTable(
        feature_names=table.feature_names,
        rows=[table.rows[i] for i in keep],
        labels=[table.labels[i] for i in keep],
    )


def drop_columns(table: RawTable, names) -> RawTable:
    """Remove non-feature columns (e.g. record identifiers) before encoding."""
    names = set(names)
    unknown = names - set(table.feature_names)
    if unknown:
        raise InputError(f"cannot drop unknown columns: {sorted(unknown)}")
    keep = [j for j, name in enumerate(table.feature_names) if name not in names]
    return RawTable(
        feature_names=[table.feature_names[j] for j in keep],
        rows=[[row[j] for j in keep] for row in table.rows],
        labels=list(table.labels),
    )


def encode_label(value: str) -> int:
    code = _LABEL_CODES.get(value.strip().lower())
    if code is None:
        raise InputError(
            f"unknown class label {value!r}; expected one of "
            f"{sorted(_LABEL_CODES)}"
        )
    return code


def encode_categorical(table: RawTable) -> Dataset:
    """Turn every feature into dense integer codes by first appearance.

    All features are treated as categorical: the first distinct string seen
    in a column gets code 0, the next distinct string code 1, and so on.
    Labels are coded ASD -> 0, non-ASD -> 1.
    """
    for i, row in enumerate(table.rows):
        if any(cell.strip() == "" for cell in row):
            raise InputError(f"row {i} still contains missing cells; drop them first")
    n, m = table.n_rows, table.n_features
    rows = np.zeros((n, m), dtype=np.float64)
    encodings: dict[str, dict[str, int]] = {}
    for j, name in enumerate(table.feature_names):
        codes: dict[str, int] = {}
        for i in range(n):
            value = table.rows[i][j]
            if value not in codes:
                codes[value] = len(codes)
            rows[i, j] = codes[value]
        encodings[name] = codes
    labels = np.array([encode_label(v) for v in table.labels], dtype=np.int64)
    return Dataset(
        feature_names=list(table.feature_names),
        rows=rows,
        labels=labels,
        encodings=encodings,
    )


def synthesize_behavioral(template: Dataset, n: int, seed: int) -> Dataset:
    """Generate n synthetic rows with values in the ranges of the template.

    Categorical features (those with an encoding) are sampled uniformly over
    the codes observed in the template; numeric features are sampled
    uniformly within [min, max]. Classes are balanced exactly: n/2 rows
    each, shuffled together.
    """
    if template.n_rows == 0:
        raise InputError("template dataset is empty")
    if n % 2 != 0:
        raise InputError(f"n must be even to balance the two classes, got {n}")
    rng = np.random.default_rng(seed)
    rows = np.zeros((n, template.n_features), dtype=np.float64)
    for j, name in enumerate(template.feature_names):
        col = template.rows[:, j]
        if name in template.encodings:
            observed = np.unique(col)
            rows[:, j] = rng.choice(observed, size=n)
        else:
            lo, hi = col.min(), col.max()
            rows[:, j] = rng.uniform(lo, hi, size=n)
    labels = np.repeat([CLASS_ASD, CLASS_NON_ASD], n // 2)
    order = rng.permutation(n)
    return Dataset(
        feature_names=list(template.feature_names),
        rows=rows[order],
        labels=labels[order],
        encodings=dict(template.encodings),
    )


def merge_datasets(
    behavioral: Dataset, distances: list[DistanceFeatures], seed: int
) -> Dataset:
    """Pair behavioral rows with facial-distance records of the same class.

    Within each class the pairing is a seeded random matching; each distance
    record is used at most once, so the merged size per class is
    min(#behavioral, #distances). The three distance features are appended
    after the behavioral features.
    """
    if not distances:
        raise InputError("no distance records to merge")
    b_classes = set(np.unique(behavioral.labels).tolist())
    d_classes = {rec.class_label for rec in distances}
    if b_classes != d_classes:
        raise InputError(
            f"class mismatch: behavioral has {sorted(b_classes)}, "
            f"distances have {sorted(d_classes)}"
        )
    rng = np.random.default_rng(seed)
    dist_matrix = np.array(
        [[r.brow_distance, r.eye_distance, r.nose_lips_distance] for r in distances],
        dtype=np.float64,
    )
    dist_labels = np.array([r.class_label for r in distances], dtype=np.int64)

    merged_rows, merged_labels = [], []
    for cls in sorted(b_classes):
        b_idx = rng.permutation(np.flatnonzero(behavioral.labels == cls))
        d_idx = rng.permutation(np.flatnonzero(dist_labels == cls))
        m = min(len(b_idx), len(d_idx))
        block = np.hstack(
            [behavioral.rows[b_idx[:m]], dist_matrix[d_idx[:m]]]
        )
        merged_rows.append(block)
        merged_labels.append(np.full(m, cls, dtype=np.int64))
    rows = np.vstack(merged_rows)
    labels = np.concatenate(merged_labels)
    order = rng.permutation(len(labels))
    return Dataset(
        feature_names=list(behavioral.feature_names) + list(DISTANCE_FEATURE_NAMES),
        rows=rows[order],
        labels=labels[order],
        encodings=dict(behavioral.encodings),
    )


def train_test_split(d: Dataset, train_fraction: float, seed: int) -> SplitPair:
    """Seeded shuffle then split; train size rounds half-up."""
    if not 0.0 < train_fraction < 1.0:
        raise InputError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if d.n_rows < 2:
        raise InputError("need at least 2 rows to split")
    n_train = int(np.floor(train_fraction * d.n_rows + 0.5))
    if n_train == 0 or n_train == d.n_rows:
        raise InputError(
            f"split of {d.n_rows} rows at {train_fraction} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(d.n_rows)
    return SplitPair(train=d.subset(perm[:n_train]), test=d.subset(perm[n_train:]))


def kfold_plan(d: Dataset, k: int, shuffle: bool, seed: int) -> FoldPlan:
    """Assign every row to one of k folds, sizes differing by at most 1.

    Without shuffling, folds are contiguous index ranges; with shuffling,
    the assignment follows a seeded permutation.
    """
    n = d.n_rows
    if not 2 <= k <= n:
        raise InputError(f"k must be in [2, {n}], got {k}")
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    fold_of_position = np.repeat(np.arange(k), sizes)
    assignments = np.empty(n, dtype=np.int64)
    if shuffle:
        perm = np.random.default_rng(seed).permutation(n)
        assignments[perm] = fold_of_position
    else:
        assignments[:] = fold_of_position
    return FoldPlan(k=k, assignments=assignments)


def partition_clients(d: Dataset, n_clients: int, seed: int) -> list[Dataset]:
    """IID equal split: seeded shuffle then contiguous shards, sizes +-1."""
    if n_clients < 1:
        raise InputError(f"n_clients must be >= 1, got {n_clients}")
    if d.n_rows < n_clients:
        raise InputError(f"cannot split {d.n_rows} rows across {n_clients} clients")
    perm = np.random.default_rng(seed).permutation(d.n_rows)
    sizes = np.full(n_clients, d.n_rows // n_clients, dtype=np.int64)
    sizes[: d.n_rows % n_clients] += 1
    shards, start = [], 0
    for size in sizes:
        shards.append(d.subset(perm[start : start + int(size)]))
        start += int(size)
    return shards


def _format_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def save_dataset(d: Dataset, csv_path, schema_path=None) -> None:
    """Write an encoded dataset as CSV plus a JSON schema sidecar."""
    csv_path = Path(csv_path)
    if schema_path is None:
        schema_path = csv_path.with_suffix(".schema.json")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(d.feature_names + ["class"])
        for row, label in zip(d.rows, d.labels):
            writer.writerow([_format_value(v) for v in row] + [str(int(label))])
    schema = {
        "version": 1,
        "label_codes": {"ASD": CLASS_ASD, "non-ASD": CLASS_NON_ASD},
        "features": [
            {
                "name": name,
                "kind": "categorical" if name in d.encodings else "numeric",
                "codes": d.encodings.get(name),
            }
            for name in d.feature_names
        ],
    }
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")


def load_dataset(csv_path, schema_path=None) -> Dataset:
    """Read back a dataset written by save_dataset."""
    csv_path = Path(csv_path)
    if schema_path is None:
        schema_path = csv_path.with_suffix(".schema.json")
    table = load_csv(csv_path, label_column="class")
    try:
        rows = np.array(
            [[float(v) for v in row] for row in table.rows], dtype=np.float64
        )
    except ValueError as exc:
        raise InputError(f"{csv_path}: non-numeric cell in encoded dataset: {exc}")
    if rows.size == 0:
        rows = rows.reshape(0, table.n_features)
    labels = np.array([int(v) for v in table.labels], dtype=np.int64)
    encodings: dict[str, dict[str, int]] = {}
    if Path(schema_path).is_file():
        with open(schema_path, encoding="utf-8") as fh:
            schema = json.load(fh)
        for feat in schema.get("features", []):
            if feat.get("kind") == "categorical" and feat.get("codes"):
                encodings[feat["name"]] = {k: int(v) for k, v in feat["codes"].items()}
    return Dataset(
        feature_names=table.feature_names,
        rows=rows,
        labels=labels,
        encodings=encodings,
    )
