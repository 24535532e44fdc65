"""
Runtime regression model zoo
"""

from .base import MODEL_FAMILIES, RegressionModel, schema_fingerprint
from .linear import LinearOLSModel, ElasticNetModel
from .neighbors import KnnModel
from .trees import FlatTree, DecisionTreeModel, RandomForestModel, GradientBoostingModel
from .registry import DEFAULT_GRIDS, create_model, fit, model_from_state, grid_for
from .evaluation import CvReport, rmse, rmse_seconds, cross_validate, tune, expand_grid, learning_curve

__all__ = [
    'MODEL_FAMILIES', 'RegressionModel', 'schema_fingerprint', 'LinearOLSModel', 'ElasticNetModel',
    'KnnModel', 'FlatTree', 'DecisionTreeModel', 'RandomForestModel', 'GradientBoostingModel',
    'DEFAULT_GRIDS', 'create_model', 'fit', 'model_from_state', 'grid_for', 'CvReport', 'rmse',
    'rmse_seconds', 'cross_validate', 'tune', 'expand_grid', 'learning_curve',
]
