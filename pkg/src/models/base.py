"""
Base regression model class/interface
"""

import hashlib
from abc import ABC, abstractmethod
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.errors import ContractError, ParameterError

MODEL_FAMILIES: Tuple[str, ...] = ('linear_ols', 'elasticnet', 'knn', 'decision_tree',
                                   'random_forest', 'gradient_boosting')
MIN_TRAINING_ROWS = 10


def schema_fingerprint(feature_names: Sequence[str]) -> str:
    """Short stable hash of an ordered feature list."""
    return hashlib.sha256("\x1f".join(feature_names).encode('utf-8')).hexdigest()[:16]


class RegressionModel(ABC):
    """Base class for runtime regressors with a uniform fit/predict contract."""

    family = 'base'

    def __init__(self, hyperparameters: Optional[Dict] = None, seed: int = 0):
        """
        Initialize model.

        Args:
            hyperparameters: Family-specific hyperparameter values
            seed: Seed for randomized training
        """
        self.hyperparameters = dict(hyperparameters or {})
        self.seed = seed
        self.feature_names: Tuple[str, ...] = ()
        self.trained_on: Optional[str] = None

    @property
    def is_fitted(self) -> bool:
        return self.trained_on is not None

    def fit(self, X: np.ndarray, y: np.ndarray, feature_names: Optional[Sequence[str]] = None) -> 'RegressionModel':
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise ContractError(f"X must be 2-D, got shape {X.shape}")
        if len(X) != len(y):
            raise ContractError(f"|X|={len(X)} and |y|={len(y)} differ")
        if len(y) < MIN_TRAINING_ROWS:
            raise ParameterError(f"Training needs at least {MIN_TRAINING_ROWS} rows, got {len(y)}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ParameterError("Training data contains non-finite values")
        if feature_names is None:
            feature_names = [f"x{j}" for j in range(X.shape[1])]
        if len(feature_names) != X.shape[1]:
            raise ContractError(f"{len(feature_names)} feature names for {X.shape[1]} columns")

        self._fit(X, y)
        self.feature_names = tuple(feature_names)
        self.trained_on = schema_fingerprint(self.feature_names)
        return self

    def predict(self, X: np.ndarray, fingerprint: Optional[str] = None) -> np.ndarray:
        """
        Predict labels for each row of X.

        Args:
            X: Rows in the training feature order
            fingerprint: Schema fingerprint of X's columns, checked when given

        Returns:
            1-D array of predictions
        """
        if not self.is_fitted:
            raise ContractError(f"{self.family} model has not been fitted")
        if fingerprint is not None and fingerprint != self.trained_on:
            raise ContractError(
                f"Feature schema {fingerprint} does not match the model's training schema {self.trained_on}"
            )
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.feature_names):
            raise ContractError(f"Expected {len(self.feature_names)} features, got {X.shape[1]}")
        return self._predict(X)

    def load_state(self, feature_names: Sequence[str], state: Dict[str, np.ndarray]) -> 'RegressionModel':
        """Restore learned parameters written by get_state()."""
        self._set_state(state)
        self.feature_names = tuple(feature_names)
        self.trained_on = schema_fingerprint(self.feature_names)
        return self

    @abstractmethod
    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        pass

    @abstractmethod
    def _predict(self, X: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def get_state(self) -> Dict[str, np.ndarray]:
        """Learned parameters as named numeric arrays."""
        pass

    @abstractmethod
    def _set_state(self, state: Dict[str, np.ndarray]) -> None:
        pass
