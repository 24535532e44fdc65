"""
Tests for the runtime regression models and their evaluation
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from sklearn.ensemble import RandomForestRegressor
from sklearn.tree import DecisionTreeRegressor

from src.errors import ContractError, ParameterError
from src.models.base import MODEL_FAMILIES, schema_fingerprint
from src.models.evaluation import cross_validate, expand_grid, learning_curve, rmse, tune
from src.models.registry import create_model, fit, grid_for, model_from_state

NAMES = ('a', 'b', 'c')


@pytest.fixture
def regression_data():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(300, 3))
    y = 0.5 * X[:, 0] - 2.0 * X[:, 1] + np.sin(X[:, 2]) + 0.05 * rng.normal(size=300)
    return X, y


class TestLinearModels:
    def test_ols_recovers_exact_plane(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(200, 3))
        y = X @ np.array([1.5, -2.0, 0.25]) + 3.0
        model = fit('linear_ols', X, y, {}, NAMES)
        assert rmse(model.predict(X), y) < 1e-8
        assert_allclose(model.coef_, [1.5, -2.0, 0.25], atol=1e-7)
        assert model.intercept_ == pytest.approx(3.0, abs=1e-7)

    def test_elasticnet_small_penalty_approaches_ols(self, regression_data):
        X, y = regression_data
        ols = fit('linear_ols', X, y, {}, NAMES)
        enet = fit('elasticnet', X, y, {'alpha': 1e-6, 'l1_ratio': 0.5}, NAMES)
        assert_allclose(enet.coef_, ols.coef_, atol=1e-3)

    def test_elasticnet_strong_penalty_shrinks(self, regression_data):
        X, y = regression_data
        enet = fit('elasticnet', X, y, {'alpha': 100.0, 'l1_ratio': 1.0}, NAMES)
        assert_array_equal(enet.coef_, np.zeros(3))


class TestNeighbours:
    def test_one_neighbour_recalls_training_labels(self, regression_data):
        X, y = regression_data
        model = fit('knn', X, y, {'n_neighbors': 1}, NAMES)
        assert_allclose(model.predict(X), y)

    def test_k_larger_than_training_set(self):
        X = np.random.default_rng(0).normal(size=(12, 2))
        with pytest.raises(ParameterError):
            fit('knn', X, np.ones(12), {'n_neighbors': 13})


class TestTreeModels:
    def test_flat_tree_matches_library_tree(self, regression_data):
        X, y = regression_data
        model = fit('decision_tree', X, y, {'max_depth': 6, 'min_samples_leaf': 2}, NAMES)
        reference = DecisionTreeRegressor(max_depth=6, min_samples_leaf=2, random_state=0).fit(X, y)
        points = np.random.default_rng(5).normal(size=(500, 3))
        assert_allclose(model.predict(points), reference.predict(points), rtol=1e-12)

    def test_forest_matches_library_forest(self, regression_data):
        X, y = regression_data
        hp = {'n_estimators': 16, 'max_depth': 5}
        model = fit('random_forest', X, y, hp, NAMES)
        reference = RandomForestRegressor(n_estimators=16, max_depth=5, max_features='sqrt',
                                          min_samples_leaf=1, random_state=0).fit(X, y)
        points = np.random.default_rng(6).normal(size=(200, 3))
        assert_allclose(model.predict(points), reference.predict(points), rtol=1e-10)

    def test_forest_spread_shrinks_with_more_trees(self, regression_data):
        X, y = regression_data
        points = np.random.default_rng(8).normal(size=(50, 3))

        def spread(n_estimators):
            predictions = np.array([fit('random_forest', X, y, {'n_estimators': n_estimators}, NAMES, seed=s)
                                    .predict(points) for s in range(8)])
            return predictions.var(axis=0).mean()

        assert spread(64) < 0.25 * spread(2)

    def test_tree_ignores_monotone_feature_rescaling(self, regression_data):
        X, y = regression_data
        hp = {'max_depth': 5, 'min_samples_leaf': 3}
        stretched = X + X ** 3
        plain = fit('decision_tree', X, y, hp, NAMES)
        rescaled = fit('decision_tree', stretched, y, hp, NAMES)
        assert_allclose(rescaled.predict(stretched), plain.predict(X), rtol=1e-12)

    def test_boosting_training_loss_never_increases(self, regression_data):
        X, y = regression_data
        model = fit('gradient_boosting', X, y,
                    {'n_estimators': 50, 'learning_rate': 0.1, 'max_depth': 3, 'min_samples_leaf': 5}, NAMES)
        history = np.array(model.loss_history_)
        assert len(history) == 51
        assert (np.diff(history) <= 1e-12).all()
        assert history[-1] < history[0] / 4

    def test_boosting_without_rounds_predicts_mean(self, regression_data):
        X, y = regression_data
        model = fit('gradient_boosting', X, y, {'n_estimators': 0}, NAMES)
        assert_allclose(model.predict(X[:5]), np.full(5, y.mean()))


class TestModelContract:
    @pytest.mark.parametrize('family', MODEL_FAMILIES)
    def test_state_restores_identical_predictions(self, family, regression_data):
        X, y = regression_data
        hp = {'n_estimators': 10, 'max_depth': 4} if family in ('random_forest', 'gradient_boosting') else {}
        model = fit(family, X, y, hp, NAMES)
        restored = model_from_state(family, hp, NAMES, model.get_state())
        assert restored.trained_on == model.trained_on
        assert_array_equal(restored.predict(X), model.predict(X))

    def test_schema_mismatch_is_rejected(self, regression_data):
        X, y = regression_data
        model = fit('linear_ols', X, y, {}, NAMES)
        assert model.trained_on == schema_fingerprint(NAMES)
        with pytest.raises(ContractError):
            model.predict(X, fingerprint=schema_fingerprint(('c', 'b', 'a')))
        with pytest.raises(ContractError):
            model.predict(X[:, :2])

    def test_unfitted_model(self):
        with pytest.raises(ContractError):
            create_model('knn').predict(np.zeros((1, 3)))

    def test_bad_training_inputs(self):
        with pytest.raises(ParameterError):
            fit('linear_ols', np.zeros((5, 2)), np.zeros(5))
        X = np.ones((20, 2))
        X[3, 1] = np.nan
        with pytest.raises(ParameterError):
            fit('linear_ols', X, np.zeros(20))
        with pytest.raises(ContractError):
            fit('linear_ols', np.zeros((20, 2)), np.zeros(19))

    def test_unknown_family(self):
        with pytest.raises(ParameterError):
            create_model('svm')
        with pytest.raises(ParameterError):
            grid_for('svm')

    def test_configured_grid_overrides_default(self):
        assert grid_for('knn', {'knn': {'n_neighbors': [7]}}) == {'n_neighbors': [7]}
        assert grid_for('knn') == {'n_neighbors': [3, 5, 9, 15]}


class TestEvaluation:
    def test_rmse(self):
        assert rmse([1.0, 2.0], [1.0, 4.0]) == pytest.approx(np.sqrt(2.0))
        with pytest.raises(ContractError):
            rmse([], [])
        with pytest.raises(ContractError):
            rmse([1.0], [1.0, 2.0])

    def test_expand_grid(self):
        points = expand_grid({'x': [1, 2], 'y': ['a']})
        assert points == [{'x': 1, 'y': 'a'}, {'x': 2, 'y': 'a'}]
        with pytest.raises(ParameterError):
            expand_grid({})
        with pytest.raises(ParameterError):
            expand_grid({'x': []})

    def test_cross_validation_is_deterministic(self, regression_data):
        X, _ = regression_data
        runtimes = np.exp(X[:, 0])
        first = cross_validate('decision_tree', X, runtimes, {'max_depth': 4}, folds=5, seed=3)
        second = cross_validate('decision_tree', X, runtimes, {'max_depth': 4}, folds=5, seed=3, n_jobs=2)
        assert len(first.fold_rmses) == 5
        assert first.fold_rmses == second.fold_rmses

    def test_tie_goes_to_fewer_trees(self, regression_data):
        X, _ = regression_data
        runtimes = np.exp(X[:, 0])
        # learning_rate 0 makes every point predict the training mean
        best, report, reports = tune('gradient_boosting', X, runtimes,
                                     {'n_estimators': [20, 5], 'learning_rate': [0.0], 'max_depth': [2]},
                                     folds=3)
        assert reports[0].fold_rmses == reports[1].fold_rmses
        assert best['n_estimators'] == 5
        assert report is reports[1]

    def test_tie_goes_to_shallower_tree(self, regression_data):
        X, _ = regression_data
        constant = np.full(len(X), 2e-3)
        best, _, _ = tune('decision_tree', X, constant, {'max_depth': [6, 2, 4]}, folds=3)
        assert best['max_depth'] == 2

    def test_tuning_prefers_the_better_point(self, regression_data):
        X, _ = regression_data
        runtimes = np.exp(X[:, 0] - X[:, 1])
        best, _, _ = tune('knn', X, runtimes, {'n_neighbors': [150, 5]}, folds=3)
        assert best['n_neighbors'] == 5

    def test_learning_curve(self, regression_data):
        X, _ = regression_data
        runtimes = np.exp(X[:, 0])
        curve = learning_curve('linear_ols', X, runtimes, {}, fractions=(0.25, 0.5, 1.0))
        assert list(curve.columns) == ['fraction', 'train_size', 'train_rmse', 'validation_rmse']
        assert len(curve) == 3
        assert curve['train_size'].is_monotonic_increasing
        assert (curve['validation_rmse'] > 0).all()
        with pytest.raises(ParameterError):
            learning_curve('linear_ols', X, runtimes, {}, fractions=(1.5,))
