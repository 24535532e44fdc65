"""
Feature engineering and preprocessing
"""

from .engineering import (FEATURE_NAMES, FeatureVector, LabeledDataset, build_features,
                          build_feature_matrix, candidate_features, labeled_from_timings)
from .transforms import (TransformState, LambdaFit, yeo_johnson, fit_lambda_mle, fit_standardizer,
                         apply_standardizer, label_forward, label_inverse)
from .outliers import lof_scores, remove_outliers
from .correlation import prune_correlated
from .split import quantile_strata, stratified_split, stratified_split_indices, stratified_folds
from .pipeline import fit_preprocessing, PreprocessingReport

__all__ = [
    'FEATURE_NAMES', 'FeatureVector', 'LabeledDataset', 'build_features', 'build_feature_matrix',
    'candidate_features', 'labeled_from_timings', 'TransformState', 'LambdaFit', 'yeo_johnson',
    'fit_lambda_mle', 'fit_standardizer', 'apply_standardizer', 'label_forward', 'label_inverse',
    'lof_scores', 'remove_outliers', 'prune_correlated', 'quantile_strata', 'stratified_split',
    'stratified_split_indices', 'stratified_folds', 'fit_preprocessing', 'PreprocessingReport',
]
