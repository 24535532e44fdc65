"""
Linear runtime models: ordinary least squares and ElasticNet
"""

import warnings
from typing import Dict

import numpy as np
from scipy import linalg
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import ElasticNet

from src.errors import NumericalError
from src.utils import console
from .base import RegressionModel


class LinearOLSModel(RegressionModel):
    """Least squares via centered normal equations with a small ridge jitter."""

    family = 'linear_ols'

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        jitter = float(self.hyperparameters.get('jitter', 1e-8))
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        gram = Xc.T @ Xc + jitter * np.eye(X.shape[1])
        rhs = Xc.T @ (y - y_mean)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter('error', linalg.LinAlgWarning)
                coef = linalg.solve(gram, rhs, assume_a='pos')
        except (linalg.LinAlgError, linalg.LinAlgWarning) as e:
            raise NumericalError(f"OLS normal equations are singular beyond jitter {jitter}: {e}")
        if not np.all(np.isfinite(coef)):
            raise NumericalError("OLS produced non-finite coefficients")
        self.coef_ = coef
        self.intercept_ = float(y_mean - x_mean @ coef)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef_ + self.intercept_

    def get_state(self) -> Dict[str, np.ndarray]:
        return {'coef': self.coef_, 'intercept': np.array([self.intercept_])}

    def _set_state(self, state: Dict[str, np.ndarray]) -> None:
        self.coef_ = np.asarray(state['coef'], dtype=np.float64)
        self.intercept_ = float(state['intercept'][0])


class ElasticNetModel(LinearOLSModel):
    """
    Coordinate descent on (1/2n)||y - Xw||^2 + alpha * (rho * ||w||_1 + (1 - rho)/2 * ||w||^2).
    """

    family = 'elasticnet'

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        regressor = ElasticNet(alpha=float(self.hyperparameters.get('alpha', 1e-3)),
                               l1_ratio=float(self.hyperparameters.get('l1_ratio', 0.5)),
                               tol=1e-6, max_iter=int(self.hyperparameters.get('max_iter', 10000)),
                               random_state=self.seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always', ConvergenceWarning)
            regressor.fit(X, y)
        if any(issubclass(w.category, ConvergenceWarning) for w in caught):
            console.warning(f"ElasticNet {self.hyperparameters} did not reach the duality-gap tolerance")
        self.coef_ = np.asarray(regressor.coef_, dtype=np.float64)
        self.intercept_ = float(regressor.intercept_)
