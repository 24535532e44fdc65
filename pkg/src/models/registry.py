"""
Model registry - creates models by family name and restores them from saved state
"""

from typing import Dict, List, Optional, Sequence

import numpy as np

from src.errors import ParameterError
from .base import MODEL_FAMILIES, RegressionModel
from .linear import ElasticNetModel, LinearOLSModel
from .neighbors import KnnModel
from .trees import DecisionTreeModel, GradientBoostingModel, RandomForestModel

MODEL_CLASSES = {
    'linear_ols': LinearOLSModel,
    'elasticnet': ElasticNetModel,
    'knn': KnnModel,
    'decision_tree': DecisionTreeModel,
    'random_forest': RandomForestModel,
    'gradient_boosting': GradientBoostingModel,
}

DEFAULT_GRIDS: Dict[str, Dict[str, List]] = {
    'linear_ols': {'jitter': [1e-8]},
    'elasticnet': {'alpha': [1e-4, 1e-3, 1e-2, 1e-1, 1.0], 'l1_ratio': [0.1, 0.5, 0.9]},
    'knn': {'n_neighbors': [3, 5, 9, 15]},
    'decision_tree': {'max_depth': [4, 6, 8, 12], 'min_samples_leaf': [2, 5, 10]},
    'random_forest': {'n_estimators': [32, 64, 128], 'max_depth': [8, 12]},
    'gradient_boosting': {'n_estimators': [100, 300], 'learning_rate': [0.05, 0.1],
                          'max_depth': [3, 5, 6], 'min_samples_leaf': [5, 10]},
}


def create_model(family: str, hyperparameters: Optional[Dict] = None, seed: int = 0) -> RegressionModel:
    """
    Create an unfitted model of the given family.

    Args:
        family: One of MODEL_FAMILIES
        hyperparameters: Family-specific values
        seed: Seed for randomized training

    Returns:
        RegressionModel instance
    """
    if family not in MODEL_CLASSES:
        raise ParameterError(f"Unsupported model family: {family} (choose from {', '.join(MODEL_FAMILIES)})")
    return MODEL_CLASSES[family](hyperparameters, seed=seed)


def fit(family: str, X: np.ndarray, y: np.ndarray, hyperparameters: Optional[Dict] = None,
        feature_names: Optional[Sequence[str]] = None, seed: int = 0) -> RegressionModel:
    return create_model(family, hyperparameters, seed).fit(X, y, feature_names)


def model_from_state(family: str, hyperparameters: Dict, feature_names: Sequence[str],
                     state: Dict[str, np.ndarray]) -> RegressionModel:
    """Rebuild a fitted model from get_state() arrays."""
    return create_model(family, hyperparameters).load_state(feature_names, state)


def grid_for(family: str, grids: Optional[Dict] = None) -> Dict[str, List]:
    """Configured grid for a family, falling back to the default grid."""
    if family not in MODEL_CLASSES:
        raise ParameterError(f"Unsupported model family: {family}")
    grids = grids or {}
    return dict(grids.get(family) or DEFAULT_GRIDS[family])
