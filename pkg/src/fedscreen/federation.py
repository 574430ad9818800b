"""Simulated federated rounds: selection, local training, aggregation.

One round = broadcast global params -> each selected client trains on its
private shard -> clients send back (params, sample size, local accuracy,
loss) -> the aggregator averages the parameter vectors and records the
size-weighted global accuracy. Every aggregator-bound update passes through
its wire serialization, so nothing but those five fields can cross the
privacy boundary.

The federated path exchanges weights over raw (unstandardized) features:
per-client feature scaling would make the averaged weights refer to
different coordinate systems. Standardization stays in the centralized
harness.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .data import Dataset, SplitPair, partition_clients, train_test_split
from .errors import DivergenceError, InputError
from .models import (
    ModelParams,
    TrainConfig,
    logistic_fit,
    logistic_init,
    logistic_predict,
    mlp_fit,
    mlp_init,
    mlp_predict,
    evaluate,
)

WIRE_VERSION = 1
_WIRE_KEYS = {"version", "client_id", "sample_size", "accuracy", "loss", "params"}

SELECTORS = ("all", "first_k", "random_k")
AGGREGATIONS = ("uniform", "size_weighted")


@dataclass
class ClientState:
    """One simulated screening center. The shard never leaves this object."""

    client_id: int
    shard: Dataset
    local_split: SplitPair
    current_params: Optional[ModelParams] = None


@dataclass(frozen=True)
class LocalUpdate:
    client_id: int
    params: ModelParams
    sample_size: int
    local_accuracy: float
    local_loss: float


@dataclass(frozen=True)
class RoundMetrics:
    round_index: int
    global_accuracy: float
    per_client: list  # (client_id, local_accuracy, sample_size)
    participating: int

    def __post_init__(self):
        recomputed = _weighted_accuracy(
            [acc for _, acc, _ in self.per_client],
            [size for _, _, size in self.per_client],
        )
        if abs(recomputed - self.global_accuracy) > 1e-12:
            raise InputError(
                f"global accuracy {self.global_accuracy} inconsistent with "
                f"per-client entries (recomputed {recomputed})"
            )


def _default_train_cfg() -> TrainConfig:
    return TrainConfig(standardize=False)


@dataclass(frozen=True)
class FederationConfig:
    n_clients: int
    rounds: int = 1
    epochs_per_round: int = 20
    selector: str = "all"
    selector_k: Optional[int] = None
    aggregation: str = "uniform"
    train_cfg: TrainConfig = field(default_factory=_default_train_cfg)
    seed: int = 0
    train_fraction: float = 0.8

    def __post_init__(self):
        if self.n_clients < 1:
            raise InputError(f"n_clients must be >= 1, got {self.n_clients}")
        if self.rounds < 1:
            raise InputError(f"rounds must be >= 1, got {self.rounds}")
        if self.epochs_per_round < 1:
            raise InputError(f"epochs_per_round must be >= 1")
        if self.selector not in SELECTORS:
            raise InputError(f"unknown selector {self.selector!r}")
        if self.aggregation not in AGGREGATIONS:
            raise InputError(f"unknown aggregation {self.aggregation!r}")
        if self.selector in ("first_k", "random_k"):
            if self.selector_k is None or not 1 <= self.selector_k <= self.n_clients:
                raise InputError(
                    f"selector {self.selector!r} needs k in [1, {self.n_clients}]"
                )
        if self.train_cfg.model_kind not in ("logistic", "mlp"):
            raise InputError(
                f"only parametric models federate, got {self.train_cfg.model_kind!r}"
            )
        if self.train_cfg.standardize:
            raise InputError(
                "federated training requires train_cfg.standardize=False; "
                "per-client scaling would break weight aggregation"
            )


def select_clients(round_index: int, client_ids, cfg: FederationConfig) -> list[int]:
    """Pick the ids training this round, returned sorted ascending."""
    ids = sorted(client_ids)
    if not ids:
        raise InputError("no clients to select from")
    if cfg.selector == "all":
        return ids
    if cfg.selector == "first_k":
        return ids[: cfg.selector_k]
    rng = np.random.default_rng([cfg.seed, round_index])
    chosen = rng.choice(len(ids), size=cfg.selector_k, replace=False)
    return sorted(ids[i] for i in chosen)


def build_clients(d: Dataset, cfg: FederationConfig) -> list[ClientState]:
    """Partition the dataset and pre-split each shard locally 80/20.

    An empty local test split is a setup-time configuration error, surfaced
    with the client id before any round runs.
    """
    shards = partition_clients(d, cfg.n_clients, cfg.seed)
    clients = []
    for client_id, shard in enumerate(shards):
        split_seed = int(
            np.random.SeedSequence([cfg.seed, client_id]).generate_state(1)[0]
        )
        try:
            split = train_test_split(shard, cfg.train_fraction, split_seed)
        except InputError as exc:
            raise InputError(f"client {client_id}: {exc}") from exc
        clients.append(
            ClientState(client_id=client_id, shard=shard, local_split=split)
        )
    return clients


def init_global_params(d: Dataset, cfg: FederationConfig) -> ModelParams:
    """Zeros for logistic; seeded uniform [-0.5, 0.5] for the MLP."""
    if cfg.train_cfg.model_kind == "logistic":
        return logistic_init(d.n_features)
    return mlp_init(d.n_features, cfg.train_cfg.hidden_width, cfg.seed)


def local_round(client: ClientState, global_params: ModelParams,
                cfg: FederationConfig) -> LocalUpdate:
    """Train from the broadcast params on this client's train split and
    evaluate on its local test split. Only aggregate quantities leave."""
    local_cfg = replace(cfg.train_cfg, epochs=cfg.epochs_per_round)
    train = client.local_split.train
    try:
        if local_cfg.model_kind == "logistic":
            params = logistic_fit(train, global_params, local_cfg)
            predict = lambda rows: logistic_predict(params, rows)
        else:
            params = mlp_fit(train, global_params, local_cfg)
            predict = lambda rows: mlp_predict(params, rows)
    except DivergenceError as exc:
        raise DivergenceError(str(exc), client_id=client.client_id) from exc
    report = evaluate(predict, client.local_split.test, probabilistic=True)
    return LocalUpdate(
        client_id=client.client_id,
        params=params,
        sample_size=train.n_rows,
        local_accuracy=report.accuracy,
        local_loss=report.loss,
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def _check_updates(updates) -> str:
    if not updates:
        raise InputError("no updates to aggregate")
    tag = updates[0].params.shape_tag
    for u in updates:
        if u.params.shape_tag != tag:
            raise InputError(
                f"shape mismatch: {u.params.shape_tag} vs {tag}"
            )
    return tag


def aggregate_uniform(updates) -> ModelParams:
    """Element-wise mean of the client parameter vectors."""
    tag = _check_updates(updates)
    stacked = np.stack([u.params.values for u in updates]).astype(np.longdouble)
    mean = (stacked.sum(axis=0) / len(updates)).astype(np.float64)
    return ModelParams(values=mean, shape_tag=tag)


def aggregate_size_weighted(updates) -> ModelParams:
    """Sample-size-weighted mean; reduces exactly to the uniform mean when
    all sizes are equal."""
    tag = _check_updates(updates)
    sizes = np.array([u.sample_size for u in updates], dtype=np.int64)
    total = int(sizes.sum())
    if total <= 0:
        raise InputError("total sample size is zero")
    if (sizes == sizes[0]).all():
        return aggregate_uniform(updates)
    stacked = np.stack([u.params.values for u in updates]).astype(np.longdouble)
    weighted = (stacked * sizes[:, None].astype(np.longdouble)).sum(axis=0) / total
    return ModelParams(values=weighted.astype(np.float64), shape_tag=tag)


def _weighted_accuracy(accuracies, sizes) -> float:
    total = math.fsum(sizes)
    if total <= 0:
        raise InputError("total sample size is zero")
    return math.fsum(a * s for a, s in zip(accuracies, sizes)) / total


def global_accuracy(updates) -> float:
    """Sample-size-weighted mean of the clients' local accuracies."""
    if not updates:
        raise InputError("no updates")
    return _weighted_accuracy(
        [u.local_accuracy for u in updates], [u.sample_size for u in updates]
    )


# ---------------------------------------------------------------------------
# Wire format (the privacy boundary)
# ---------------------------------------------------------------------------

def update_to_wire(update: LocalUpdate) -> str:
    from .models import params_to_doc

    return json.dumps(
        {
            "version": WIRE_VERSION,
            "client_id": update.client_id,
            "sample_size": update.sample_size,
            "accuracy": update.local_accuracy,
            "loss": update.local_loss,
            "params": params_to_doc(update.params),
        }
    )


def update_from_wire(text: str) -> LocalUpdate:
    from .models import params_from_doc

    doc = json.loads(text)
    if set(doc) != _WIRE_KEYS:
        raise InputError(
            f"unexpected wire fields: {sorted(set(doc) ^ _WIRE_KEYS)}"
        )
    if doc["version"] != WIRE_VERSION:
        raise InputError(f"unsupported wire version {doc['version']!r}")
    return LocalUpdate(
        client_id=int(doc["client_id"]),
        params=params_from_doc(doc["params"]),
        sample_size=int(doc["sample_size"]),
        local_accuracy=float(doc["accuracy"]),
        local_loss=float(doc["loss"]),
    )


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FederationResult:
    rounds: list  # RoundMetrics per round
    final_params: ModelParams
    shard_sizes: list
    train_sizes: list

    @property
    def final_accuracy(self) -> float:
        return self.rounds[-1].global_accuracy


def run_federation(d: Dataset, cfg: FederationConfig,
                   message_log: Optional[list] = None) -> FederationResult:
    """Run the configured number of rounds; deterministic per (data, config).

    Every client update crosses the wire serialization before aggregation;
    pass message_log to capture the exact aggregator-bound byte strings.
    """
    clients = build_clients(d, cfg)
    params = init_global_params(d, cfg)
    metrics = []
    for round_index in range(cfg.rounds):
        selected = select_clients(round_index, [c.client_id for c in clients], cfg)
        updates = []
        for client_id in selected:
            client = clients[client_id]
            client.current_params = params
            try:
                update = local_round(client, params, cfg)
            except DivergenceError as exc:
                raise DivergenceError(
                    f"round {round_index}: {exc}", client_id=client_id
                ) from exc
            wire = update_to_wire(update)
            if message_log is not None:
                message_log.append(wire)
            updates.append(update_from_wire(wire))
        updates.sort(key=lambda u: u.client_id)
        if cfg.aggregation == "uniform":
            params = aggregate_uniform(updates)
        else:
            params = aggregate_size_weighted(updates)
        metrics.append(
            RoundMetrics(
                round_index=round_index,
                global_accuracy=global_accuracy(updates),
                per_client=[
                    (u.client_id, u.local_accuracy, u.sample_size) for u in updates
                ],
                participating=len(updates),
            )
        )
    return FederationResult(
        rounds=metrics,
        final_params=params,
        shard_sizes=[c.shard.n_rows for c in clients],
        train_sizes=[c.local_split.train.n_rows for c in clients],
    )


def write_round_metrics_csv(metrics, path) -> None:
    """Per-client rows plus one 'global' summary row per round."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "client_id", "acc", "size"])
        for rm in metrics:
            for client_id, acc, size in rm.per_client:
                writer.writerow([rm.round_index, client_id, repr(acc), size])
            total = sum(size for _, _, size in rm.per_client)
            writer.writerow(
                [rm.round_index, "global", repr(rm.global_accuracy), total]
            )
