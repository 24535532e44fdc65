"""
Local Outlier Factor scoring and outlier removal
"""

from typing import NamedTuple, Optional, Tuple

import numpy as np
from sklearn.neighbors import NearestNeighbors

from src.errors import DataQualityError, ParameterError
from src.utils import console
from .engineering import LabeledDataset
from .transforms import apply_standardizer, fit_standardizer, label_forward

LRD_CAP = 1e12


def lof_scores(X: np.ndarray, k: int = 20) -> np.ndarray:
    """
    LOF of every row of X (Euclidean, k nearest neighbours excluding the point itself).

    reach_dist(p, o) = max(k_distance(o), d(p, o)); lrd(p) = 1 / mean reach_dist,
    capped at 1e12 where neighbours coincide; LOF(p) = mean(lrd(o)) / lrd(p).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if X.shape[0] <= k:
        raise ParameterError(f"LOF with k={k} needs more than {k} rows, got {X.shape[0]}")

    nn = NearestNeighbors(n_neighbors=k, algorithm='kd_tree').fit(X)
    distances, neighbors = nn.kneighbors()
    k_distance = distances[:, -1]

    reach = np.maximum(k_distance[neighbors], distances)
    mean_reach = reach.mean(axis=1)
    with np.errstate(divide='ignore'):
        lrd = np.where(mean_reach > 0, 1.0 / mean_reach, LRD_CAP)
    lrd = np.minimum(lrd, LRD_CAP)

    return lrd[neighbors].mean(axis=1) / lrd


class OutlierReport(NamedTuple):
    kept: np.ndarray
    scores: np.ndarray
    dropped: int


def remove_outliers(dataset: LabeledDataset, k: int = 20, threshold: float = 1.5,
                    max_fraction: float = 0.20, features: Optional[np.ndarray] = None,
                    label_transform: str = 'log_e') -> Tuple[LabeledDataset, OutlierReport]:
    """
    Drop rows whose LOF exceeds the threshold.

    Scores are computed on the standardized feature matrix (dataset.X, or
    `features` when given) joined with the standardized transformed label.

    Returns:
        Tuple of (filtered dataset, OutlierReport)
    """
    n = len(dataset)
    if np.isinf(threshold):
        return dataset, OutlierReport(np.ones(n, dtype=bool), np.ones(n), 0)

    X = dataset.X if features is None else np.asarray(features, dtype=np.float64)
    z = label_forward(dataset.y, label_transform).reshape(-1, 1)
    z_mean, z_std = fit_standardizer(z)
    points = np.column_stack([X, apply_standardizer(z, z_mean, z_std)])

    k_eff = min(k, n - 1)
    if k_eff < 1:
        console.warning("Too few rows for outlier detection; skipping")
        return dataset, OutlierReport(np.ones(n, dtype=bool), np.ones(n), 0)
    if k_eff < k:
        console.warning(f"Only {n} rows; LOF uses k={k_eff} instead of {k}")

    scores = lof_scores(points, k_eff)
    kept = scores <= threshold
    dropped = int(n - kept.sum())
    if dropped > max_fraction * n:
        worst = np.argsort(scores)[::-1][:5]
        examples = ", ".join(
            f"{tuple(int(v) for v in dataset.keys[i])} LOF={scores[i]:.2f}" for i in worst
        )
        raise DataQualityError(
            f"LOF would drop {dropped} of {n} rows ({dropped / n:.1%} > {max_fraction:.0%}); "
            f"the gathered timings look noisy. Highest scores: {examples}"
        )
    console.info(f"Outlier removal dropped {dropped} of {n} row(s)")
    return dataset.subset(kept), OutlierReport(kept, scores, dropped)
