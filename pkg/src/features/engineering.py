"""
Feature engineering for (shape, n_threads) runtime regression

Serial-runtime terms come from the problem size alone; parallel-runtime terms
divide work or memory traffic by the thread count.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.backend.matrix import GemmShape
from src.errors import ContractError
from src.harness.timing import TimingDataset

FEATURE_NAMES: Tuple[str, ...] = (
    'm', 'k', 'n', 'n_threads',
    'mk', 'kn', 'mn',
    'mk_kn_mn',
    'mkn',
    'mkn_per_thread',
    'mk_kn_mn_per_thread',
)


@dataclass
class FeatureVector:
    """Named, ordered feature values for one (shape, n_threads) pair."""

    values: np.ndarray
    schema: Tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.schema = tuple(self.schema)
        if self.values.shape != (len(self.schema),):
            raise ContractError(
                f"Feature vector has {self.values.size} values for {len(self.schema)} names"
            )
        if not np.all(np.isfinite(self.values)):
            raise ContractError("Feature vector contains non-finite values")

    def as_dict(self):
        return dict(zip(self.schema, self.values.tolist()))


def build_feature_matrix(m, k, n, n_threads) -> np.ndarray:
    """Vectorized features; each argument is a scalar or a 1-D array."""
    m, k, n, t = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (m, k, n, n_threads)))
    mk, kn, mn = m * k, k * n, m * n
    surface = mk + kn + mn
    volume = mk * n
    return np.column_stack([m, k, n, t, mk, kn, mn, surface, volume, volume / t, surface / t])


def build_features(shape: GemmShape, n_threads: int) -> FeatureVector:
    return FeatureVector(build_feature_matrix(shape.m, shape.k, shape.n, n_threads)[0])


def candidate_features(shape: GemmShape, candidates: Sequence[int]) -> np.ndarray:
    """One row per candidate thread count, built in a single pass."""
    return build_feature_matrix(shape.m, shape.k, shape.n, np.asarray(candidates, dtype=np.float64))


@dataclass
class LabeledDataset:
    """Feature matrix, positive runtime labels and the (m, k, n, n_threads) key of each row."""

    X: np.ndarray
    y: np.ndarray
    keys: np.ndarray
    schema: Tuple[str, ...] = FEATURE_NAMES
    provenance: Optional[TimingDataset] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.keys = np.asarray(self.keys, dtype=np.int64).reshape(-1, 4)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.schema):
            raise ContractError(f"X must have {len(self.schema)} columns, got shape {self.X.shape}")
        if not (len(self.X) == len(self.y) == len(self.keys)):
            raise ContractError(f"|X|={len(self.X)}, |y|={len(self.y)}, |keys|={len(self.keys)} differ")
        if np.any(~(self.y > 0)):
            raise ContractError("Runtime labels must be positive")

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, index) -> 'LabeledDataset':
        return LabeledDataset(X=self.X[index], y=self.y[index], keys=self.keys[index],
                              schema=self.schema, provenance=self.provenance)

    @property
    def shape_keys(self) -> List[Tuple[int, int, int]]:
        return [tuple(int(v) for v in row[:3]) for row in self.keys]


def labeled_from_timings(dataset: TimingDataset) -> LabeledDataset:
    """Features and runtime labels for every timing record."""
    if not dataset.records:
        raise ContractError("Timing dataset is empty")
    keys = np.array([record.key for record in dataset.records], dtype=np.int64)
    X = build_feature_matrix(keys[:, 0], keys[:, 1], keys[:, 2], keys[:, 3])
    y = np.array([record.runtime_s for record in dataset.records], dtype=np.float64)
    return LabeledDataset(X=X, y=y, keys=keys, provenance=dataset)
