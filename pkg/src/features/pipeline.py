"""
Preprocessing pipeline: Yeo-Johnson -> standardize -> LOF removal -> correlation pruning
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.utils import console
from .correlation import prune_correlated
from .engineering import LabeledDataset
from .outliers import remove_outliers
from .transforms import (TransformState, apply_standardizer, fit_power_transform, fit_standardizer,
                         power_transform_columns)


@dataclass
class PreprocessingReport:
    rows_in: int
    rows_dropped: int
    degenerate_features: List[str] = field(default_factory=list)
    dropped_features: List[str] = field(default_factory=list)


def fit_preprocessing(train: LabeledDataset, features_config: Optional[Dict] = None
                      ) -> Tuple[TransformState, LabeledDataset, np.ndarray, PreprocessingReport]:
    """
    Fit the transform on a training set.

    Args:
        train: Raw-feature training rows
        features_config: 'features' configuration section

    Returns:
        Tuple of (TransformState, filtered raw dataset, processed feature matrix, report)
        where processed == state.transform(filtered.X)
    """
    cfg = features_config or {}
    label_transform = cfg.get('label_transform', 'log_e')

    lambdas, degenerate = fit_power_transform(train.X)
    powered = power_transform_columns(train.X, lambdas)
    means, stds = fit_standardizer(powered)
    standardized = apply_standardizer(powered, means, stds)

    filtered, outliers = remove_outliers(train, k=int(cfg.get('lof_neighbors', 20)),
                                         threshold=float(cfg.get('lof_threshold', 1.5)),
                                         max_fraction=float(cfg.get('max_outlier_fraction', 0.20)),
                                         features=standardized, label_transform=label_transform)

    kept, dropped = prune_correlated(standardized[outliers.kept], train.schema,
                                     threshold=float(cfg.get('correlation_threshold', 0.80)),
                                     return_dropped=True)
    state = TransformState(schema=train.schema, lambdas=lambdas, means=means, stds=stds,
                           kept_features=kept, label_transform=label_transform)
    console.info(f"Kept features: {', '.join(kept)}")

    report = PreprocessingReport(
        rows_in=len(train), rows_dropped=outliers.dropped,
        degenerate_features=[name for name, flag in zip(train.schema, degenerate) if flag],
        dropped_features=dropped,
    )
    return state, filtered, state.transform(filtered.X), report
