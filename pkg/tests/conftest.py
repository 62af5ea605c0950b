import numpy as np
import pytest

from sigmine.trace import FeatureSchema, MiningDataset, WorkloadTrace


@pytest.fixture
def schema8() -> FeatureSchema:
    return FeatureSchema()


def random_trace(
    rng: np.random.Generator, p: int | None = None, q: int = 8, workload_id: str = "w"
) -> WorkloadTrace:
    """Random valid trace: non-negative finite values, binary labels."""
    if p is None:
        p = int(rng.integers(1, 40))
    values = rng.gamma(shape=2.0, scale=50.0, size=(p, q))
    labels = rng.integers(0, 2, size=p)
    return WorkloadTrace(workload_id, values, labels)


def random_dataset(rng: np.random.Generator, k_max: int = 64, q_max: int = 8) -> MiningDataset:
    """Random binary mining dataset for oracle comparisons."""
    k = int(rng.integers(1, k_max + 1))
    q = int(rng.integers(1, q_max + 1))
    density = rng.uniform(0.15, 0.85)
    transactions = (rng.random((k, q)) < density).astype(np.uint8)
    labels = rng.integers(0, 2, size=k)
    return MiningDataset(transactions, labels, (("synthetic", k),))
