"""
k-nearest-neighbour runtime model
"""

from typing import Dict

import numpy as np
from sklearn.neighbors import KNeighborsRegressor

from src.errors import ParameterError
from .base import RegressionModel


class KnnModel(RegressionModel):
    """Mean label of the k nearest training rows (Euclidean)."""

    family = 'knn'

    def _build(self, X: np.ndarray, y: np.ndarray) -> None:
        k = int(self.hyperparameters.get('n_neighbors', 5))
        if k < 1 or k > len(y):
            raise ParameterError(f"knn needs 1 <= k <= {len(y)} training rows, got k={k}")
        self.X_train_ = X
        self.y_train_ = y
        self._regressor = KNeighborsRegressor(n_neighbors=k, algorithm='kd_tree').fit(X, y)

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        self._build(X.copy(), y.copy())

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return self._regressor.predict(X)

    def get_state(self) -> Dict[str, np.ndarray]:
        return {'X_train': self.X_train_, 'y_train': self.y_train_}

    def _set_state(self, state: Dict[str, np.ndarray]) -> None:
        self._build(np.asarray(state['X_train'], dtype=np.float64),
                    np.asarray(state['y_train'], dtype=np.float64))
