"""
Runtime thread-count predictor

Loaded once from a model bundle; every GEMM call evaluates the model for each
candidate thread count, picks the fastest prediction and dispatches the call
with that count. The most recent decision(s) are cached by shape.
"""

import threading
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.backend.base import GemmBackend
from src.backend.backend_manager import create_backend
from src.backend.matrix import GemmParams, GemmShape, MatrixLike, memory_footprint
from src.bundle.bundle_io import ModelBundle, load_bundle
from src.errors import ContractError, ParameterError
from src.features.engineering import candidate_features
from src.features.transforms import TransformState
from src.models.base import RegressionModel, schema_fingerprint
from src.utils import console
from src.utils.config_loader import DEFAULT_CONFIG, load_config
from src.utils.host import logical_cores


def predict_runtimes(model: RegressionModel, transform: TransformState, shape: GemmShape,
                     candidates: Sequence[int], fingerprint: Optional[str] = None) -> np.ndarray:
    """Predicted runtime in seconds for each candidate, from one batched model call."""
    processed = transform.transform(candidate_features(shape, candidates))
    return transform.label_inverse(model.predict(processed, fingerprint))


def choose_from_runtimes(candidates: Sequence[int], runtimes: np.ndarray, tie_tolerance: float = 0.01) -> int:
    """
    Smallest candidate whose predicted runtime is within `tie_tolerance`
    (relative) of the minimum. Candidates must be ascending.
    """
    runtimes = np.asarray(runtimes, dtype=np.float64)
    if len(runtimes) != len(candidates) or len(runtimes) == 0:
        raise ContractError(f"{len(runtimes)} predictions for {len(candidates)} candidates")
    if not np.all(np.isfinite(runtimes)):
        # a non-finite prediction can never be the fastest
        runtimes = np.where(np.isfinite(runtimes), runtimes, np.inf)
    best = float(np.min(runtimes))
    if not np.isfinite(best):
        return int(candidates[0])
    band = best + tie_tolerance * abs(best)
    return int(candidates[int(np.flatnonzero(runtimes <= band)[0])])


def select_threads(model: RegressionModel, transform: TransformState, shape: GemmShape,
                   candidates: Sequence[int], tie_tolerance: float = 0.01,
                   fingerprint: Optional[str] = None) -> int:
    """One full selection pass: features, transform replay, predict, argmin."""
    runtimes = predict_runtimes(model, transform, shape, candidates, fingerprint)
    return choose_from_runtimes(candidates, runtimes, tie_tolerance)


@dataclass(frozen=True)
class DecisionRecord:
    """Outcome of one thread-count decision."""

    shape: GemmShape
    n_threads: int
    cache_hit: bool
    eval_seconds: float


@dataclass
class PredictorStats:
    calls: int = 0
    cache_hits: int = 0
    evaluations: int = 0
    eval_time_accum: float = 0.0

    def as_dict(self) -> Dict:
        return asdict(self)


class Predictor:
    """Model-driven thread-count selection in front of a GEMM backend."""

    def __init__(self, model: RegressionModel, transform: TransformState, candidates: Sequence[int],
                 backend: Optional[GemmBackend] = None, cache_size: int = 1,
                 tie_tolerance: float = 0.01, max_threads: Optional[int] = None,
                 max_footprint_bytes: int = 0, precision: str = 'single'):
        """
        Initialize predictor.

        Args:
            model: Fitted regressor over transform.kept_features
            transform: Preprocessing replayed on every feature batch
            candidates: Thread counts the model was trained on
            backend: Backend used by adsala_gemm (built-in default backend on first use if None)
            cache_size: Shapes remembered; 1 keeps only the last call, 0 disables caching
            tie_tolerance: Relative band around the fastest prediction resolved towards fewer threads
            max_threads: Host thread limit (defaults to the logical core count)
            max_footprint_bytes: Training footprint cap; larger shapes are flagged as extrapolation
            precision: Operand precision for footprint checks
        """
        if cache_size < 0:
            raise ParameterError(f"cache_size must be >= 0, got {cache_size}")
        if tie_tolerance < 0:
            raise ParameterError(f"tie_tolerance must be >= 0, got {tie_tolerance}")
        requested = sorted({int(c) for c in candidates})
        if not requested or requested[0] < 1:
            raise ContractError(f"Candidate thread counts must be a non-empty set of positive integers, got {list(candidates)}")

        self.max_threads = int(max_threads or logical_cores())
        self.candidates: Tuple[int, ...] = tuple(c for c in requested if c <= self.max_threads)
        self.truncated = len(self.candidates) < len(requested)
        if not self.candidates:
            raise ContractError(
                f"No candidate thread count fits on this host (candidates {requested}, limit {self.max_threads})"
            )
        if self.truncated:
            console.warning(f"Host allows {self.max_threads} thread(s); dropped candidate(s) "
                            f"{[c for c in requested if c > self.max_threads]}")

        self.fingerprint = schema_fingerprint(transform.kept_features)
        if model.trained_on != self.fingerprint:
            raise ContractError("Model was not trained on the transform's kept features")

        self.model = model
        self.transform = transform
        self.tie_tolerance = float(tie_tolerance)
        self.cache_size = int(cache_size)
        self.max_footprint_bytes = int(max_footprint_bytes)
        self.precision = precision
        self._backend = backend
        self._cache: 'OrderedDict[GemmShape, int]' = OrderedDict()
        self._lock = threading.Lock()
        self._stats = PredictorStats()

    @property
    def backend(self) -> GemmBackend:
        with self._lock:
            if self._backend is None:
                self._backend = create_backend(DEFAULT_CONFIG['backend'])
            return self._backend

    def is_extrapolation(self, shape: GemmShape) -> bool:
        return 0 < self.max_footprint_bytes < memory_footprint(shape, self.precision)

    def predict_runtimes(self, shape: GemmShape) -> np.ndarray:
        return predict_runtimes(self.model, self.transform, shape, self.candidates, self.fingerprint)

    def predict_threads(self, shape: GemmShape) -> int:
        """Evaluate the model for every candidate and remember the decision."""
        start = time.perf_counter()
        chosen = choose_from_runtimes(self.candidates, self.predict_runtimes(shape), self.tie_tolerance)
        elapsed = time.perf_counter() - start
        with self._lock:
            self._stats.evaluations += 1
            self._stats.eval_time_accum += elapsed
            self._remember(shape, chosen)
        return chosen

    def predict_table(self, shape: GemmShape) -> pd.DataFrame:
        """Predicted runtime of every candidate, with the chosen row flagged."""
        runtimes = self.predict_runtimes(shape)
        chosen = choose_from_runtimes(self.candidates, runtimes, self.tie_tolerance)
        return pd.DataFrame({
            'n_threads': list(self.candidates),
            'predicted_runtime_s': runtimes,
            'chosen': [c == chosen for c in self.candidates],
        })

    def _remember(self, shape: GemmShape, n_threads: int) -> None:
        if self.cache_size == 0:
            return
        self._cache[shape] = n_threads
        self._cache.move_to_end(shape)
        while len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)

    def decide(self, shape: GemmShape) -> DecisionRecord:
        """Cached thread count for `shape`, evaluating the model on a miss."""
        with self._lock:
            self._stats.calls += 1
            cached = self._cache.get(shape)
            if cached is not None:
                self._cache.move_to_end(shape)
                self._stats.cache_hits += 1
                return DecisionRecord(shape=shape, n_threads=cached, cache_hit=True, eval_seconds=0.0)

        start = time.perf_counter()
        chosen = self.predict_threads(shape)
        return DecisionRecord(shape=shape, n_threads=chosen, cache_hit=False,
                              eval_seconds=time.perf_counter() - start)

    def adsala_gemm(self, shape: GemmShape, A: MatrixLike, B: MatrixLike, C: MatrixLike,
                    alpha: float = 1.0, beta: float = 0.0) -> Tuple[MatrixLike, DecisionRecord]:
        """
        C <- alpha * A @ B + beta * C with a model-chosen thread count.

        Returns:
            Tuple of (C, DecisionRecord)
        """
        decision = self.decide(shape)
        params = GemmParams(alpha=alpha, beta=beta, n_threads=decision.n_threads)
        self.backend.gemm(shape, params, A, B, C)
        return C, decision

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()

    def cached_shapes(self) -> Tuple[GemmShape, ...]:
        with self._lock:
            return tuple(self._cache)

    def stats_snapshot(self) -> Dict:
        with self._lock:
            return self._stats.as_dict()

    def close(self) -> None:
        with self._lock:
            if self._backend is not None:
                self._backend.close()


def predictor_from_bundle(bundle: ModelBundle, backend: Optional[GemmBackend] = None,
                          runtime_config: Optional[Dict] = None,
                          max_threads: Optional[int] = None) -> Predictor:
    cfg = runtime_config or {}
    return Predictor(bundle.model, bundle.transform, bundle.candidates, backend=backend,
                     cache_size=int(cfg.get('cache_size', 1)),
                     tie_tolerance=float(cfg.get('tie_tolerance', 0.01)),
                     max_threads=max_threads, max_footprint_bytes=bundle.mem_cap_bytes)


def load_predictor(bundle_path: Optional[Path] = None, backend: Optional[GemmBackend] = None,
                   config: Optional[Dict] = None, max_threads: Optional[int] = None) -> Predictor:
    """
    Load a bundle and build a ready predictor; no file I/O happens afterwards.

    The path defaults to runtime.bundle_path, which ADSALA_BUNDLE overrides.
    """
    config = config or load_config()
    path = Path(bundle_path or config['runtime']['bundle_path'])
    bundle = load_bundle(path)
    if backend is None:
        backend = create_backend(config.get('backend', DEFAULT_CONFIG['backend']))
    predictor = predictor_from_bundle(bundle, backend, config['runtime'], max_threads)
    console.info(f"Loaded {bundle.model.family} bundle from {path} "
                 f"({len(predictor.candidates)} candidate thread count(s))")
    return predictor


def predict_threads(predictor: Predictor, shape: GemmShape) -> int:
    return predictor.predict_threads(shape)


def adsala_gemm(predictor: Predictor, shape: GemmShape, A: MatrixLike, B: MatrixLike, C: MatrixLike,
                alpha: float = 1.0, beta: float = 0.0) -> Tuple[MatrixLike, DecisionRecord]:
    return predictor.adsala_gemm(shape, A, B, C, alpha, beta)
