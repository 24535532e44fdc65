"""
Model evaluation: RMSE, stratified cross-validation, grid search and learning curves
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import ContractError, ParameterError
from src.features.split import stratified_folds, stratified_split_indices
from src.features.transforms import label_forward, label_inverse
from src.utils import console
from .registry import create_model


@dataclass
class CvReport:
    family: str
    hyperparameters: Dict
    fold_rmses: List[float] = field(default_factory=list)

    @property
    def mean_rmse(self) -> float:
        return float(np.mean(self.fold_rmses))


def rmse(predictions: Sequence[float], targets: Sequence[float]) -> float:
    """Root mean squared error."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ContractError(f"{p.size} predictions for {t.size} targets")
    if p.size == 0:
        raise ContractError("RMSE of an empty set")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def rmse_seconds(model, X: np.ndarray, runtimes: np.ndarray, label_transform: str = 'log_e') -> float:
    """RMSE in raw seconds of a model trained on transformed labels."""
    return rmse(label_inverse(model.predict(X), label_transform), runtimes)


def cross_validate(family: str, X: np.ndarray, y: np.ndarray, hyperparameters: Dict,
                   folds: int = 5, seed: int = 0, label_transform: str = 'log_e',
                   feature_names: Optional[Sequence[str]] = None, n_jobs: int = 1) -> CvReport:
    """
    Stratified k-fold RMSE (raw seconds) of one hyperparameter point.

    Args:
        family: Model family
        X: Processed feature matrix
        y: Runtimes in seconds
        hyperparameters: Hyperparameter values
        folds: Number of folds
        seed: Fold assignment and model seed
        label_transform: Label transform used for training
        feature_names: Column names of X
        n_jobs: Folds fitted concurrently

    Returns:
        CvReport with one RMSE per fold
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = label_forward(y, label_transform)
    splits = stratified_folds(y, folds, seed)

    def run_fold(split: Tuple[np.ndarray, np.ndarray]) -> float:
        train, held = split
        model = create_model(family, hyperparameters, seed).fit(X[train], z[train], feature_names)
        return rmse_seconds(model, X[held], y[held], label_transform)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as executor:
            fold_rmses = list(executor.map(run_fold, splits))
    else:
        fold_rmses = [run_fold(split) for split in splits]
    return CvReport(family=family, hyperparameters=dict(hyperparameters), fold_rmses=fold_rmses)


def expand_grid(grid: Dict[str, Sequence]) -> List[Dict]:
    """Cartesian product of a hyperparameter grid, in key/value order."""
    if not grid:
        raise ParameterError("Hyperparameter grid is empty")
    keys = list(grid)
    for key in keys:
        if not list(grid[key]):
            raise ParameterError(f"Hyperparameter '{key}' has no candidate values")
    return [dict(zip(keys, values)) for values in itertools.product(*(list(grid[k]) for k in keys))]


def _cost_key(hyperparameters: Dict) -> Tuple[float, float]:
    trees = hyperparameters.get('n_estimators', 0) or 0
    depth = hyperparameters.get('max_depth')
    return float(trees), float('inf') if depth is None else float(depth)


def tune(family: str, X: np.ndarray, y: np.ndarray, grid: Dict[str, Sequence], folds: int = 5,
         seed: int = 0, label_transform: str = 'log_e',
         feature_names: Optional[Sequence[str]] = None,
         n_jobs: int = 1) -> Tuple[Dict, CvReport, List[CvReport]]:
    """
    Exhaustive grid search by cross-validated RMSE.

    Ties on mean RMSE go to fewer trees, then shallower depth, then grid order.

    Returns:
        Tuple of (best hyperparameters, best CvReport, all CvReports in grid order)
    """
    points = expand_grid(grid)
    reports = []
    for index, point in enumerate(points, 1):
        report = cross_validate(family, X, y, point, folds, seed, label_transform, feature_names, n_jobs)
        reports.append(report)
        console.progress(f"  {family}: {index}/{len(points)} grid point(s)")
    console.progress(f"  {family}: {len(points)} grid point(s) evaluated\n")

    best_index = min(range(len(points)),
                     key=lambda i: (reports[i].mean_rmse, *_cost_key(points[i]), i))
    return dict(points[best_index]), reports[best_index], reports


def learning_curve(family: str, X: np.ndarray, y: np.ndarray, hyperparameters: Dict,
                   fractions: Sequence[float] = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0),
                   validation_fraction: float = 0.2, seed: int = 0, label_transform: str = 'log_e',
                   feature_names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Train and validation RMSE (raw seconds) against training-set size.

    Returns:
        DataFrame with columns fraction, train_size, train_rmse, validation_rmse
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = label_forward(y, label_transform)
    n_strata = max(1, min(10, len(y) // 10))
    train_idx, val_idx = stratified_split_indices(y, validation_fraction, n_strata, seed)
    order = np.random.default_rng(seed).permutation(train_idx)

    rows = []
    for fraction in fractions:
        if not 0 < fraction <= 1:
            raise ParameterError(f"Learning-curve fractions must be in (0, 1], got {fraction}")
        size = max(10, int(round(fraction * len(order))))
        subset = order[:size]
        try:
            model = create_model(family, hyperparameters, seed).fit(X[subset], z[subset], feature_names)
        except ParameterError as e:
            console.warning(f"Learning curve skipped {size} rows: {e}")
            continue
        rows.append({'fraction': float(fraction), 'train_size': int(size),
                     'train_rmse': rmse_seconds(model, X[subset], y[subset], label_transform),
                     'validation_rmse': rmse_seconds(model, X[val_idx], y[val_idx], label_transform)})
    return pd.DataFrame(rows, columns=['fraction', 'train_size', 'train_rmse', 'validation_rmse'])
