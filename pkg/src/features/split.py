"""
Label-stratified train/test splitting and cross-validation folds
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import StratifiedKFold

from src.errors import ParameterError
from .engineering import LabeledDataset


def quantile_strata(y: Sequence[float], n_strata: int = 10) -> np.ndarray:
    """Equal-count label-quantile bin of each value (ties broken by position)."""
    y = np.asarray(y, dtype=np.float64)
    if n_strata < 1:
        raise ParameterError(f"n_strata must be >= 1, got {n_strata}")
    if len(y) < n_strata:
        raise ParameterError(f"Need at least {n_strata} rows for {n_strata} strata, got {len(y)}")
    ranks = pd.Series(y).rank(method='first')
    return pd.qcut(ranks, n_strata, labels=False).to_numpy(dtype=np.int64)


def stratified_split_indices(y: Sequence[float], test_fraction: float = 0.30, n_strata: int = 10,
                             seed: int = 0, groups: Optional[Sequence] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Train and test row indices.

    Within each stratum floor(test_fraction * size + 0.5) members go to test.
    With `groups`, whole groups are assigned, stratified by the group mean label.
    """
    if not 0 < test_fraction < 1:
        raise ParameterError(f"test_fraction must be in (0, 1), got {test_fraction}")
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(seed)

    if groups is not None:
        codes, uniques = pd.factorize(pd.Series(list(groups)), sort=False)
        group_means = pd.Series(y).groupby(codes).mean().sort_index().to_numpy()
        unit_labels = group_means
    else:
        codes = np.arange(len(y))
        unit_labels = y

    strata = quantile_strata(unit_labels, n_strata)
    test_units = []
    for stratum in np.unique(strata):
        members = np.flatnonzero(strata == stratum)
        n_test = int(np.floor(test_fraction * len(members) + 0.5))
        test_units.extend(rng.permutation(members)[:n_test].tolist())

    is_test_unit = np.zeros(len(unit_labels), dtype=bool)
    is_test_unit[test_units] = True
    is_test = is_test_unit[np.asarray(codes)]
    return np.flatnonzero(~is_test), np.flatnonzero(is_test)


def stratified_split(dataset: LabeledDataset, test_fraction: float = 0.30, n_strata: int = 10,
                     seed: int = 0, group_by_shape: bool = False) -> Tuple[LabeledDataset, LabeledDataset]:
    """Label-stratified (train, test) split; optionally keeping each shape on one side."""
    groups = dataset.shape_keys if group_by_shape else None
    train_idx, test_idx = stratified_split_indices(dataset.y, test_fraction, n_strata, seed, groups)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def stratified_folds(y: Sequence[float], folds: int = 5, seed: int = 0,
                     n_strata: int = 10) -> List[Tuple[np.ndarray, np.ndarray]]:
    """K folds stratified on label-quantile bins."""
    y = np.asarray(y, dtype=np.float64)
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    if len(y) < folds:
        raise ParameterError(f"Need at least {folds} rows for {folds} folds, got {len(y)}")
    n_strata = max(1, min(n_strata, len(y) // folds))
    strata = quantile_strata(y, n_strata)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return [(train, test) for train, test in splitter.split(np.zeros((len(y), 1)), strata)]
