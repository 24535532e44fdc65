"""
Model evaluation latency (t_eval)
"""

import time
from typing import Sequence, Tuple

import numpy as np

from src.backend.matrix import GemmShape
from src.errors import ContractError, ParameterError
from src.features.transforms import TransformState
from src.models.base import RegressionModel, schema_fingerprint
from src.runtime.predictor import select_threads


def measure_eval_latency(model: RegressionModel, transform: TransformState, candidates: Sequence[int],
                         trials: int = 1000, seed: int = 0, dim_range: Tuple[int, int] = (16, 4096),
                         tie_tolerance: float = 0.01) -> float:
    """
    Mean wall time of one thread-selection pass over `trials` random shapes.

    Shape generation happens before timing; each timed pass builds features
    for all candidates, replays the transform, predicts and takes the argmin.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if not candidates:
        raise ContractError("Latency measurement needs at least one candidate thread count")
    candidates = sorted(int(c) for c in candidates)
    fingerprint = schema_fingerprint(transform.kept_features)

    lo, hi = dim_range
    dims = np.random.default_rng(seed).integers(lo, hi + 1, size=(trials, 3))
    shapes = [GemmShape(int(m), int(k), int(n)) for m, k, n in dims]

    total = 0.0
    for shape in shapes:
        start = time.perf_counter()
        select_threads(model, transform, shape, candidates, tie_tolerance, fingerprint)
        total += time.perf_counter() - start
    return max(total / trials, 1e-9)
