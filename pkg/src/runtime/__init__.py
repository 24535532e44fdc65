"""
Deployed thread-count predictor
"""

from .predictor import (Predictor, DecisionRecord, PredictorStats, load_predictor, predictor_from_bundle,
                        predict_threads, adsala_gemm, select_threads, predict_runtimes,
                        choose_from_runtimes)

__all__ = ['Predictor', 'DecisionRecord', 'PredictorStats', 'load_predictor', 'predictor_from_bundle',
           'predict_threads', 'adsala_gemm', 'select_threads', 'predict_runtimes',
           'choose_from_runtimes']
