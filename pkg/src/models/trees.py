"""
Tree runtime models: CART, random forest and squared-loss gradient boosting

Fitted trees are flattened into preorder node arrays so prediction and
serialization do not depend on the training library's objects. Ensembles
are packed into one set of arrays and traversed by a compiled kernel.
"""

from dataclasses import dataclass
from typing import Dict, List

import numpy as np
from numba import njit
from sklearn.ensemble import RandomForestRegressor
from sklearn.tree import DecisionTreeRegressor

from src.errors import ContractError
from .base import RegressionModel

LEAF = -1


@njit(cache=True)
def _ensemble_predict(X, feature, threshold, left, right, value, offsets, init, scale):
    out = np.empty(X.shape[0])
    for s in range(X.shape[0]):
        acc = init
        for t in range(offsets.shape[0] - 1):
            root = offsets[t]
            node = root
            while left[node] != -1:
                if X[s, feature[node]] <= threshold[node]:
                    node = root + left[node]
                else:
                    node = root + right[node]
            acc += scale * value[node]
        out[s] = acc
    return out


def _split_inputs(X: np.ndarray) -> np.ndarray:
    # Split thresholds were chosen on float32 inputs
    return np.ascontiguousarray(np.asarray(X, dtype=np.float32), dtype=np.float64)


@dataclass
class FlatTree:
    """Preorder binary tree; node i is a leaf when left[i] == -1, children are tree-local ids."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @classmethod
    def from_sklearn(cls, estimator) -> 'FlatTree':
        tree = estimator.tree_
        return cls(feature=np.asarray(tree.feature, dtype=np.int64).copy(),
                   threshold=np.asarray(tree.threshold, dtype=np.float64).copy(),
                   left=np.asarray(tree.children_left, dtype=np.int64).copy(),
                   right=np.asarray(tree.children_right, dtype=np.int64).copy(),
                   value=np.asarray(tree.value[:, 0, 0], dtype=np.float64).copy())

    @property
    def node_count(self) -> int:
        return len(self.value)

    def predict(self, X: np.ndarray) -> np.ndarray:
        packed = pack_trees([self])
        return predict_packed(packed, X)


def pack_trees(trees: List[FlatTree]) -> Dict[str, np.ndarray]:
    """Concatenate trees; tree t owns nodes tree_offsets[t]:tree_offsets[t+1]."""
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([t.node_count for t in trees])

    def cat(name, dtype):
        parts = [getattr(t, name) for t in trees]
        return np.ascontiguousarray(np.concatenate(parts), dtype=dtype) if parts else np.zeros(0, dtype=dtype)

    return {'tree_offsets': offsets, 'feature': cat('feature', np.int64),
            'threshold': cat('threshold', np.float64), 'left': cat('left', np.int64),
            'right': cat('right', np.int64), 'value': cat('value', np.float64)}


def unpack_trees(state: Dict[str, np.ndarray]) -> List[FlatTree]:
    offsets = np.asarray(state['tree_offsets'], dtype=np.int64)
    trees = []
    for start, end in zip(offsets[:-1], offsets[1:]):
        if end <= start:
            raise ContractError("Serialized tree has no nodes")
        trees.append(FlatTree(feature=np.asarray(state['feature'][start:end], dtype=np.int64),
                              threshold=np.asarray(state['threshold'][start:end], dtype=np.float64),
                              left=np.asarray(state['left'][start:end], dtype=np.int64),
                              right=np.asarray(state['right'][start:end], dtype=np.int64),
                              value=np.asarray(state['value'][start:end], dtype=np.float64)))
    return trees


def predict_packed(packed: Dict[str, np.ndarray], X: np.ndarray,
                   init: float = 0.0, scale: float = 1.0) -> np.ndarray:
    """init + sum over trees of scale * leaf value, accumulated in tree order."""
    return _ensemble_predict(_split_inputs(X), packed['feature'], packed['threshold'],
                             packed['left'], packed['right'], packed['value'],
                             packed['tree_offsets'], float(init), float(scale))


def _tree_kwargs(hyperparameters: Dict) -> Dict:
    return {'max_depth': hyperparameters.get('max_depth'),
            'min_samples_leaf': int(hyperparameters.get('min_samples_leaf', 1))}


class DecisionTreeModel(RegressionModel):
    """CART regression tree with variance-reduction splits."""

    family = 'decision_tree'

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        estimator = DecisionTreeRegressor(criterion='squared_error', random_state=self.seed,
                                          **_tree_kwargs(self.hyperparameters))
        estimator.fit(X, y)
        self.tree_ = FlatTree.from_sklearn(estimator)
        self._packed = pack_trees([self.tree_])

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return predict_packed(self._packed, X)

    def get_state(self) -> Dict[str, np.ndarray]:
        return dict(self._packed)

    def _set_state(self, state: Dict[str, np.ndarray]) -> None:
        self.tree_ = unpack_trees(state)[0]
        self._packed = pack_trees([self.tree_])


class RandomForestModel(RegressionModel):
    """Bagged CART trees with sqrt(d) feature subsampling; prediction is the tree mean."""

    family = 'random_forest'

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        hp = self.hyperparameters
        estimator = RandomForestRegressor(n_estimators=int(hp.get('n_estimators', 64)),
                                          max_features=hp.get('max_features', 'sqrt'),
                                          bootstrap=bool(hp.get('bootstrap', True)),
                                          n_jobs=hp.get('n_jobs'),
                                          random_state=self.seed, **_tree_kwargs(hp))
        estimator.fit(X, y)
        self.trees_ = [FlatTree.from_sklearn(tree) for tree in estimator.estimators_]
        self._packed = pack_trees(self.trees_)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return predict_packed(self._packed, X) / len(self.trees_)

    def get_state(self) -> Dict[str, np.ndarray]:
        return dict(self._packed)

    def _set_state(self, state: Dict[str, np.ndarray]) -> None:
        self.trees_ = unpack_trees(state)
        self._packed = pack_trees(self.trees_)


class GradientBoostingModel(RegressionModel):
    """
    Stagewise squared-loss boosting: F_0 = mean(y), F_r = F_{r-1} + eta * tree_r,
    each tree fitted to the current residuals.
    """

    family = 'gradient_boosting'

    @property
    def learning_rate(self) -> float:
        return float(self.hyperparameters.get('learning_rate', 0.1))

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        hp = self.hyperparameters
        rounds = int(hp.get('n_estimators', 100))
        eta = self.learning_rate

        self.base_ = float(y.mean())
        self.trees_: List[FlatTree] = []
        predictions = np.full_like(y, self.base_)
        self.loss_history_ = [float(np.mean((y - predictions) ** 2))]
        for _ in range(rounds):
            residuals = y - predictions
            tree = DecisionTreeRegressor(criterion='squared_error', random_state=self.seed,
                                         **_tree_kwargs(hp))
            tree.fit(X, residuals)
            flat = FlatTree.from_sklearn(tree)
            predictions = predict_packed(pack_trees([flat]), X, init=0.0, scale=eta) + predictions
            self.trees_.append(flat)
            self.loss_history_.append(float(np.mean((y - predictions) ** 2)))
        self._packed = pack_trees(self.trees_)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return predict_packed(self._packed, X, init=self.base_, scale=self.learning_rate)

    def get_state(self) -> Dict[str, np.ndarray]:
        state = dict(self._packed)
        state['base'] = np.array([self.base_])
        return state

    def _set_state(self, state: Dict[str, np.ndarray]) -> None:
        self.base_ = float(state['base'][0])
        self.trees_ = unpack_trees(state)
        self._packed = pack_trees(self.trees_)
        self.loss_history_ = []
