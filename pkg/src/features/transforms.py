"""
Yeo-Johnson power transform, standardization and the replayable TransformState
"""

import warnings
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, stats

from src.errors import ContractError, ParameterError
from src.utils import console

LAMBDA_BOUNDS = (-5.0, 5.0)
LAMBDA_TOL = 1e-4
LABEL_TRANSFORMS = ('log_e', 'identity')

ArrayLike = Union[float, Sequence[float], np.ndarray]


def yeo_johnson(x: ArrayLike, lmbda: float):
    """
    Yeo-Johnson transform of x (scalar or array).

    Lambdas within machine epsilon of 0 (x >= 0 branch) or 2 (x < 0 branch)
    use the logarithmic limits.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x >= 0

    # when x >= 0
    if abs(lmbda) < np.spacing(1.0):
        out[pos] = np.log1p(x[pos])
    else:
        out[pos] = np.expm1(lmbda * np.log1p(x[pos])) / lmbda

    # when x < 0
    if abs(lmbda - 2) > np.spacing(1.0):
        out[~pos] = -np.expm1((2 - lmbda) * np.log1p(-x[~pos])) / (2 - lmbda)
    else:
        out[~pos] = -np.log1p(-x[~pos])

    return float(out) if scalar else out


class LambdaFit(NamedTuple):
    lmbda: float
    degenerate: bool = False


def fit_lambda_mle(column: ArrayLike, bounds: Tuple[float, float] = LAMBDA_BOUNDS,
                   tol: float = LAMBDA_TOL) -> LambdaFit:
    """
    Maximum-likelihood Yeo-Johnson lambda over a bounded interval.

    Args:
        column: At least three finite values
        bounds: Search interval for lambda
        tol: Absolute tolerance on lambda

    Returns:
        LambdaFit; a constant column gives lambda=1 with degenerate=True
    """
    data = np.asarray(column, dtype=np.float64).ravel()
    if data.size < 3:
        raise ParameterError(f"Lambda fit needs at least 3 values, got {data.size}")
    if not np.all(np.isfinite(data)):
        raise ParameterError("Lambda fit needs finite values")
    if np.ptp(data) == 0:
        return LambdaFit(1.0, True)

    def neg_llf(lmbda: float) -> float:
        with np.errstate(all='ignore'), warnings.catch_warnings():
            warnings.simplefilter('ignore', RuntimeWarning)
            value = stats.yeojohnson_llf(lmbda, data)
        return -value if np.isfinite(value) else np.inf

    result = optimize.minimize_scalar(neg_llf, bounds=bounds, method='bounded',
                                      options={'xatol': tol})
    return LambdaFit(float(result.x), False)


def fit_standardizer(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Column means and sample (n-1) standard deviations; zero spread clamps to 1."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    means = X.mean(axis=0)
    if X.shape[0] > 1:
        stds = X.std(axis=0, ddof=1)
    else:
        stds = np.zeros(X.shape[1])
    bad = ~(np.isfinite(stds) & (stds > 0))
    if np.any(bad):
        console.warning(f"{int(bad.sum())} feature column(s) have zero variance; std clamped to 1")
        stds = np.where(bad, 1.0, stds)
    return means, stds


def apply_standardizer(X: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - means) / stds


def label_forward(y: ArrayLike, label_transform: str = 'log_e') -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if label_transform == 'log_e':
        return np.log(y)
    if label_transform == 'identity':
        return y.copy()
    raise ParameterError(f"label_transform must be one of {LABEL_TRANSFORMS}, got {label_transform!r}")


def label_inverse(z: ArrayLike, label_transform: str = 'log_e') -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if label_transform == 'log_e':
        return np.exp(z)
    if label_transform == 'identity':
        return z.copy()
    raise ParameterError(f"label_transform must be one of {LABEL_TRANSFORMS}, got {label_transform!r}")


@dataclass
class TransformState:
    """
    Fitted preprocessing: per-feature lambda, mean and std over the full schema,
    the kept feature subset, and the label transform.
    """

    schema: Tuple[str, ...]
    lambdas: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    kept_features: Tuple[str, ...]
    label_transform: str = 'log_e'
    _kept_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.schema = tuple(self.schema)
        self.kept_features = tuple(self.kept_features)
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stds = np.asarray(self.stds, dtype=np.float64)
        d = len(self.schema)
        if not (self.lambdas.shape == self.means.shape == self.stds.shape == (d,)):
            raise ContractError("lambdas, means and stds must each have one entry per schema feature")
        if np.any(~(self.stds > 0)):
            raise ContractError("Transform stds must all be positive")
        if not self.kept_features:
            raise ContractError("Transform keeps no features")
        if len(set(self.kept_features)) != len(self.kept_features):
            raise ContractError("Kept features contain duplicates")
        unknown = [f for f in self.kept_features if f not in self.schema]
        if unknown:
            raise ContractError(f"Kept features not in schema: {unknown}")
        if self.label_transform not in LABEL_TRANSFORMS:
            raise ContractError(f"Unknown label transform {self.label_transform!r}")
        self._kept_index = np.array([self.schema.index(f) for f in self.kept_features], dtype=np.intp)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransformState):
            return NotImplemented
        return (self.schema == other.schema and self.kept_features == other.kept_features
                and self.label_transform == other.label_transform
                and np.array_equal(self.lambdas, other.lambdas)
                and np.array_equal(self.means, other.means)
                and np.array_equal(self.stds, other.stds))

    def power_transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.schema):
            raise ContractError(f"Expected {len(self.schema)} raw features, got {X.shape[1]}")
        return power_transform_columns(X, self.lambdas)

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Raw schema features -> Yeo-Johnson -> standardized -> kept columns."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.schema):
            raise ContractError(f"Expected {len(self.schema)} raw features, got {X.shape[1]}")
        idx = self._kept_index
        powered = power_transform_columns(X[:, idx], self.lambdas[idx])
        return apply_standardizer(powered, self.means[idx], self.stds[idx])

    def label_forward(self, y: ArrayLike) -> np.ndarray:
        return label_forward(y, self.label_transform)

    def label_inverse(self, z: ArrayLike) -> np.ndarray:
        return label_inverse(z, self.label_transform)


def fit_power_transform(X: np.ndarray) -> Tuple[np.ndarray, List[bool]]:
    """MLE lambda for every column."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    fits = [fit_lambda_mle(X[:, j]) for j in range(X.shape[1])]
    return np.array([f.lmbda for f in fits]), [f.degenerate for f in fits]


def power_transform_columns(X: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    """Apply column j's lambda to column j."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.empty_like(X)
    for j, lmbda in enumerate(lambdas):
        out[:, j] = yeo_johnson(X[:, j], float(lmbda))
    return out
