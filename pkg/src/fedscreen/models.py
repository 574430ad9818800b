"""From-scratch classifiers with a uniform fit/predict/parameter contract.

Logistic regression and a one-hidden-layer MLP train by full-batch gradient
descent on binary cross-entropy and expose their weights as a flat
ModelParams vector, the unit exchanged with the federated aggregator.
Decision trees and k-NN are non-parametric and run only in the centralized
harness.

Class convention: models output the probability of class 1 (non-ASD);
probability >= 0.5 decides class 1. Majority-vote ties fall to class 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .data import Dataset
from .errors import DivergenceError, InputError

PARAMS_DOC_VERSION = 1
MODEL_KINDS = ("logistic", "mlp", "tree", "knn")
BCE_EPS = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Flat parameter vector plus a tag describing its layout.

    shape_tag formats: "logistic:<n_features>" (weights then bias) and
    "mlp:<n_features>x<hidden_width>" (W1, b1, W2, b2 flattened in order).
    """

    values: np.ndarray
    shape_tag: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InputError("params must be a flat vector")
        if not np.isfinite(values).all():
            raise InputError("params contain non-finite entries")
        expected = _expected_size(self.shape_tag)
        if values.size != expected:
            raise InputError(
                f"shape_tag {self.shape_tag!r} expects {expected} values, "
                f"got {values.size}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def model_kind(self) -> str:
        return self.shape_tag.split(":", 1)[0]


def _expected_size(shape_tag: str) -> int:
    kind, _, spec = shape_tag.partition(":")
    try:
        if kind == "logistic":
            return int(spec) + 1
        if kind == "mlp":
            n, h = (int(v) for v in spec.split("x"))
            return n * h + h + h + 1
    except ValueError:
        pass
    raise InputError(f"unrecognized shape_tag {shape_tag!r}")


def params_to_doc(params: ModelParams) -> dict:
    return {
        "version": PARAMS_DOC_VERSION,
        "model_kind": params.model_kind,
        "shape_tag": params.shape_tag,
        "values": params.values.tolist(),
    }


def params_from_doc(doc: dict) -> ModelParams:
    if doc.get("version") != PARAMS_DOC_VERSION:
        raise InputError(f"unsupported params document version {doc.get('version')!r}")
    return ModelParams(values=np.array(doc["values"], dtype=np.float64),
                       shape_tag=doc["shape_tag"])


def params_to_json(params: ModelParams) -> str:
    # json round-trips Python floats via repr, so this is bit-exact.
    return json.dumps(params_to_doc(params))


def params_from_json(text: str) -> ModelParams:
    return params_from_doc(json.loads(text))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.1
    seed: int = 0
    model_kind: str = "logistic"
    hidden_width: int = 16
    max_depth: Optional[int] = None
    k_neighbors: int = 3
    standardize: bool = True

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise InputError(f"unknown model kind {self.model_kind!r}")
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise InputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.model_kind == "mlp" and self.hidden_width < 1:
            raise InputError(f"hidden_width must be >= 1, got {self.hidden_width}")
        if self.model_kind == "knn" and (self.k_neighbors < 1 or self.k_neighbors % 2 == 0):
            raise InputError(f"k must be odd and >= 1, got {self.k_neighbors}")
        if self.max_depth is not None and self.max_depth < 1:
            raise InputError(f"max_depth must be >= 1 or None, got {self.max_depth}")


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    loss: float
    n_test: int


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(probs, labels) -> float:
    """Mean binary cross-entropy, probabilities clamped at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if probs.shape != labels.shape:
        raise InputError(
            f"length mismatch: {probs.shape} probs vs {labels.shape} labels"
        )
    p = np.clip(probs, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean/std transform fitted on training data only."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, rows) -> "Standardizer":
        rows = np.asarray(rows, dtype=np.float64)
        mean = rows.mean(axis=0)
        scale = rows.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        return cls(mean=mean, scale=scale)

    def transform(self, rows) -> np.ndarray:
        return (np.asarray(rows, dtype=np.float64) - self.mean) / self.scale


def _with_rows(d: Dataset, rows: np.ndarray) -> Dataset:
    return Dataset(feature_names=d.feature_names, rows=rows, labels=d.labels,
                   encodings=d.encodings)


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------

def logistic_init(n_features: int) -> ModelParams:
    return ModelParams(values=np.zeros(n_features + 1),
                       shape_tag=f"logistic:{n_features}")


def logistic_predict(params: ModelParams, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if params.model_kind != "logistic":
        raise InputError(f"not logistic params: {params.shape_tag}")
    if rows.shape[1] != params.values.size - 1:
        raise InputError(
            f"shape mismatch: {rows.shape[1]} features vs params for "
            f"{params.values.size - 1}"
        )
    w, b = params.values[:-1], params.values[-1]
    return sigmoid(rows @ w + b)


def logistic_loss_grad(values: np.ndarray, rows, labels) -> tuple[float, np.ndarray]:
    """BCE loss and its gradient w.r.t. the flat (weights, bias) vector."""
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    w, b = values[:-1], values[-1]
    p = sigmoid(rows @ w + b)
    n = rows.shape[0]
    residual = p - labels
    grad = np.concatenate([rows.T @ residual / n, [residual.mean()]])
    return bce_loss(p, labels), grad


def logistic_fit(train: Dataset, init: ModelParams, cfg: TrainConfig) -> ModelParams:
    """Full-batch gradient descent on BCE for cfg.epochs passes."""
    if init.values.size != train.n_features + 1:
        raise InputError(
            f"init has {init.values.size} params, expected {train.n_features + 1}"
        )
    values = init.values.copy()
    for epoch in range(cfg.epochs):
        loss, grad = logistic_loss_grad(values, train.rows, train.labels)
        if not np.isfinite(loss):
            raise DivergenceError("logistic training diverged", epoch=epoch)
        values -= cfg.learning_rate * grad
    if not np.isfinite(values).all():
        raise DivergenceError("logistic training diverged", epoch=cfg.epochs)
    return ModelParams(values=values, shape_tag=init.shape_tag)


# ---------------------------------------------------------------------------
# One-hidden-layer MLP
# ---------------------------------------------------------------------------

def mlp_shape_tag(n_features: int, hidden_width: int) -> str:
    return f"mlp:{n_features}x{hidden_width}"


def mlp_init(n_features: int, hidden_width: int, seed: int) -> ModelParams:
    rng = np.random.default_rng(seed)
    size = _expected_size(mlp_shape_tag(n_features, hidden_width))
    return ModelParams(values=rng.uniform(-0.5, 0.5, size=size),
                       shape_tag=mlp_shape_tag(n_features, hidden_width))


def _mlp_unpack(values: np.ndarray, shape_tag: str):
    spec = shape_tag.split(":", 1)[1]
    n, h = (int(v) for v in spec.split("x"))
    w1 = values[: n * h].reshape(n, h)
    b1 = values[n * h : n * h + h]
    w2 = values[n * h + h : n * h + 2 * h]
    b2 = values[-1]
    return w1, b1, w2, b2


def mlp_predict(params: ModelParams, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if params.model_kind != "mlp":
        raise InputError(f"not mlp params: {params.shape_tag}")
    w1, b1, w2, b2 = _mlp_unpack(params.values, params.shape_tag)
    if rows.shape[1] != w1.shape[0]:
        raise InputError(
            f"shape mismatch: {rows.shape[1]} features vs mlp input {w1.shape[0]}"
        )
    hidden = sigmoid(rows @ w1 + b1)
    return sigmoid(hidden @ w2 + b2)


def mlp_loss_grad(values: np.ndarray, rows, labels,
                  shape_tag: str) -> tuple[float, np.ndarray]:
    """BCE loss and full backprop gradient for the flat parameter vector."""
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    w1, b1, w2, b2 = _mlp_unpack(values, shape_tag)
    hidden = sigmoid(rows @ w1 + b1)
    probs = sigmoid(hidden @ w2 + b2)
    n = rows.shape[0]
    dz2 = (probs - labels) / n
    g_w2 = hidden.T @ dz2
    g_b2 = dz2.sum()
    dz1 = np.outer(dz2, w2) * hidden * (1.0 - hidden)
    g_w1 = rows.T @ dz1
    g_b1 = dz1.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])
    return bce_loss(probs, labels), grad


def mlp_fit(train: Dataset, init: ModelParams, cfg: TrainConfig) -> ModelParams:
    """Full-batch backpropagation for cfg.epochs passes, deterministic."""
    values = init.values.copy()
    for epoch in range(cfg.epochs):
        loss, grad = mlp_loss_grad(values, train.rows, train.labels, init.shape_tag)
        if not np.isfinite(loss):
            raise DivergenceError("mlp training diverged", epoch=epoch)
        values -= cfg.learning_rate * grad
    if not np.isfinite(values).all():
        raise DivergenceError("mlp training diverged", epoch=cfg.epochs)
    return ModelParams(values=values, shape_tag=init.shape_tag)


# ---------------------------------------------------------------------------
# Decision tree (greedy binary splits by Gini impurity)
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    prediction: Optional[int] = None
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.prediction is not None


def gini(labels) -> float:
    labels = np.asarray(labels)
    n = labels.size
    if n == 0:
        return 0.0
    p1 = labels.sum() / n
    return float(1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))


def _majority(labels) -> int:
    # Tie goes to class 0 (ASD): a tie errs toward screening-positive.
    ones = int(np.asarray(labels).sum())
    return 1 if 2 * ones > len(labels) else 0


def _best_split(rows: np.ndarray, labels: np.ndarray):
    """Lowest weighted Gini split; ties broken by lowest feature index then
    lowest threshold (guaranteed by ascending scan with strict improvement)."""
    n = labels.size
    parent = gini(labels)
    best = (parent, None, None)
    for j in range(rows.shape[1]):
        col = rows[:, j]
        distinct = np.unique(col)
        if distinct.size < 2:
            continue
        for t in (distinct[:-1] + distinct[1:]) / 2.0:
            mask = col <= t
            n_left = int(mask.sum())
            score = (n_left * gini(labels[mask])
                     + (n - n_left) * gini(labels[~mask])) / n
            if score < best[0]:
                best = (score, j, float(t))
    return best


def _first_valid_split(rows: np.ndarray):
    for j in range(rows.shape[1]):
        distinct = np.unique(rows[:, j])
        if distinct.size >= 2:
            return j, float((distinct[0] + distinct[1]) / 2.0)
    return None, None


def _grow(rows: np.ndarray, labels: np.ndarray, depth: int,
          max_depth: Optional[int]) -> TreeNode:
    if labels.size == 0:
        raise InputError("empty node while growing tree")
    if gini(labels) == 0.0 or (max_depth is not None and depth >= max_depth):
        return TreeNode(prediction=_majority(labels))
    _, feature, threshold = _best_split(rows, labels)
    if feature is None:
        # No strict impurity reduction, but the node is impure. Take the
        # first available zero-gain split (lowest feature, lowest threshold)
        # so consistent data is always fit exactly; XOR-like nodes would
        # otherwise stall at a mixed leaf.
        feature, threshold = _first_valid_split(rows)
        if feature is None:
            return TreeNode(prediction=_majority(labels))
    mask = rows[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=_grow(rows[mask], labels[mask], depth + 1, max_depth),
        right=_grow(rows[~mask], labels[~mask], depth + 1, max_depth),
    )


def tree_fit(train: Dataset, cfg: TrainConfig) -> TreeNode:
    if train.n_rows == 0:
        raise InputError("empty training set")
    return _grow(train.rows, train.labels, depth=0, max_depth=cfg.max_depth)


def tree_predict(tree: TreeNode, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    out = np.empty(rows.shape[0], dtype=np.int64)
    for i, row in enumerate(rows):
        node = tree
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        out[i] = node.prediction
    return out


# ---------------------------------------------------------------------------
# k-nearest neighbors
# ---------------------------------------------------------------------------

def knn_predict(train: Dataset, query_rows, k: int) -> np.ndarray:
    """Majority vote of the k euclidean-nearest training rows.

    Ties at the k-th distance are broken by lowest training-row index
    (stable argsort over rows stored in index order).
    """
    if k < 1 or k > train.n_rows:
        raise InputError(f"k must be in [1, {train.n_rows}], got {k}")
    query_rows = np.asarray(query_rows, dtype=np.float64)
    diffs = query_rows[:, None, :] - train.rows[None, :, :]
    dists = np.sqrt((diffs ** 2).sum(axis=2))
    order = np.argsort(dists, axis=1, kind="stable")[:, :k]
    votes = train.labels[order]
    ones = votes.sum(axis=1)
    return (2 * ones > k).astype(np.int64)


# ---------------------------------------------------------------------------
# Evaluation and the uniform fit/predict harness
# ---------------------------------------------------------------------------

def evaluate(predict_fn: Callable[[np.ndarray], np.ndarray], test: Dataset,
             probabilistic: bool = True) -> EvalReport:
    """Exact accuracy plus BCE loss (probabilistic models) or 0-1 loss."""
    if test.n_rows == 0:
        raise InputError("empty test set")
    outputs = np.asarray(predict_fn(test.rows))
    if probabilistic:
        classes = (outputs >= 0.5).astype(np.int64)
        loss = bce_loss(outputs, test.labels)
    else:
        classes = outputs.astype(np.int64)
        loss = float(np.mean(classes != test.labels))
    correct = int((classes == test.labels).sum())
    return EvalReport(accuracy=correct / test.n_rows, loss=loss, n_test=test.n_rows)


@dataclass(frozen=True)
class FittedModel:
    """A trained classifier bundled with its input scaler, if any."""

    kind: str
    scaler: Optional[Standardizer]
    params: Optional[ModelParams] = None
    tree: Optional[TreeNode] = None
    train_data: Optional[Dataset] = None
    k_neighbors: int = 3

    @property
    def probabilistic(self) -> bool:
        return self.kind in ("logistic", "mlp")

    def predict(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if self.scaler is not None:
            rows = self.scaler.transform(rows)
        if self.kind == "logistic":
            return logistic_predict(self.params, rows)
        if self.kind == "mlp":
            return mlp_predict(self.params, rows)
        if self.kind == "tree":
            return tree_predict(self.tree, rows)
        return knn_predict(self.train_data, rows, self.k_neighbors)

    def evaluate(self, test: Dataset) -> EvalReport:
        return evaluate(self.predict, test, probabilistic=self.probabilistic)


def train_model(train: Dataset, cfg: TrainConfig,
                init: Optional[ModelParams] = None) -> FittedModel:
    """Centralized training entry point for all four model kinds."""
    scaler = None
    fit_data = train
    if cfg.standardize and cfg.model_kind in ("logistic", "mlp", "knn"):
        scaler = Standardizer.fit(train.rows)
        fit_data = _with_rows(train, scaler.transform(train.rows))
    if cfg.model_kind == "logistic":
        if init is None:
            init = logistic_init(train.n_features)
        params = logistic_fit(fit_data, init, cfg)
        return FittedModel(kind="logistic", scaler=scaler, params=params)
    if cfg.model_kind == "mlp":
        if init is None:
            init = mlp_init(train.n_features, cfg.hidden_width, cfg.seed)
        params = mlp_fit(fit_data, init, cfg)
        return FittedModel(kind="mlp", scaler=scaler, params=params)
    if cfg.model_kind == "tree":
        return FittedModel(kind="tree", scaler=None, tree=tree_fit(train, cfg))
    if cfg.k_neighbors > train.n_rows:
        raise InputError(
            f"k={cfg.k_neighbors} exceeds {train.n_rows} training rows"
        )
    return FittedModel(kind="knn", scaler=scaler, train_data=fit_data,
                       k_neighbors=cfg.k_neighbors)
