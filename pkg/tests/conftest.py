from pathlib import Path

import numpy as np
import pytest

from fedscreen.data import Dataset

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def behavioral_csv() -> Path:
    return FIXTURES / "behavioral_raw.csv"


@pytest.fixture(scope="session")
def landmarks_file() -> Path:
    return FIXTURES / "landmarks.txt"


@pytest.fixture(scope="session")
def trend_csv() -> Path:
    return FIXTURES / "trend.csv"


def make_blobs(n: int, seed: int, n_features: int = 2, gap: float = 4.0) -> Dataset:
    """Two well-separated gaussian clusters, one per class."""
    rng = np.random.default_rng(seed)
    half = n // 2
    rows = rng.normal(0, 1.0, size=(n, n_features))
    rows[:half] -= gap / 2
    rows[half:] += gap / 2
    labels = np.repeat([0, 1], [half, n - half])
    order = rng.permutation(n)
    return Dataset(
        feature_names=[f"f{j}" for j in range(n_features)],
        rows=rows[order],
        labels=labels[order],
    )


def random_dataset(n: int, n_features: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(
        feature_names=[f"f{j}" for j in range(n_features)],
        rows=rng.normal(0, 1.0, size=(n, n_features)),
        labels=rng.integers(0, 2, size=n),
    )
