"""Federated-learning simulation for ASD screening on tabular and
facial-distance data."""

from .data import (
    Dataset,
    FoldPlan,
    RawTable,
    SplitPair,
    drop_missing,
    encode_categorical,
    kfold_plan,
    load_csv,
    load_dataset,
    merge_datasets,
    partition_clients,
    save_dataset,
    synthesize_behavioral,
    train_test_split,
)
from .errors import DivergenceError, InputError
from .federation import (
    FederationConfig,
    FederationResult,
    LocalUpdate,
    RoundMetrics,
    aggregate_size_weighted,
    aggregate_uniform,
    global_accuracy,
    run_federation,
)
from .landmarks import (
    DistanceFeatures,
    LandmarkSet,
    euclidean,
    extract_distances,
    parse_landmarks,
    region_anchor,
)
from .models import (
    EvalReport,
    ModelParams,
    TrainConfig,
    bce_loss,
    evaluate,
    knn_predict,
    logistic_fit,
    logistic_predict,
    mlp_fit,
    mlp_predict,
    train_model,
    tree_fit,
    tree_predict,
)

__version__ = "0.1.0"
