"""
Shared fixtures: project import path, quiet console, a native backend,
synthetic timing data from a known cost function and a small fitted bundle.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.backend.matrix import GemmShape
from src.backend.native import NativeBackend
from src.bundle.bundle_io import ModelBundle
from src.features.engineering import labeled_from_timings
from src.features.pipeline import fit_preprocessing
from src.features.transforms import TransformState
from src.harness.timing import TimingDataset, TimingRecord
from src.models.base import RegressionModel
from src.models.registry import fit
from src.utils import console

COST_A = 1e-9
COST_B = 1e-9
COST_C = 1e-4


def synthetic_cost(m, k, n, t):
    """c(m, k, n, t) = A*mkn/t + B*(mk + kn + mn) + C*t"""
    return COST_A * m * k * n / t + COST_B * (m * k + k * n + m * n) + COST_C * t


def synthetic_dataset(shapes, thread_counts, noise=0.05, seed=0, host='synthetic-host') -> TimingDataset:
    """Timings from synthetic_cost with uniform multiplicative noise of +/- `noise`."""
    rng = np.random.default_rng(seed)
    records = []
    for shape in shapes:
        for t in thread_counts:
            runtime = synthetic_cost(shape.m, shape.k, shape.n, t) * (1.0 + noise * rng.uniform(-1.0, 1.0))
            records.append(TimingRecord(shape=shape, n_threads=int(t), runtime_s=runtime, repeats=10))
    return TimingDataset(records=records, host_descriptor=host, max_threads=max(thread_counts))


class ThreadCurveModel(RegressionModel):
    """Predicts f(n_threads) from a single n_threads column (test double)."""

    family = 'linear_ols'

    def __init__(self, curve, hyperparameters=None, seed=0):
        super().__init__(hyperparameters, seed)
        self.curve = curve
        self.evaluations = 0

    def _fit(self, X, y):
        pass

    def _predict(self, X):
        self.evaluations += 1
        return np.asarray([self.curve(t) for t in X[:, 0]], dtype=np.float64)

    def get_state(self):
        return {}

    def _set_state(self, state):
        pass


def identity_thread_transform() -> TransformState:
    """Keeps only n_threads, unchanged (lambda=1, mean 0, std 1), identity label."""
    from src.features.engineering import FEATURE_NAMES
    d = len(FEATURE_NAMES)
    return TransformState(schema=FEATURE_NAMES, lambdas=np.ones(d), means=np.zeros(d), stds=np.ones(d),
                          kept_features=('n_threads',), label_transform='identity')


def curve_model(curve) -> ThreadCurveModel:
    return ThreadCurveModel(curve).load_state(('n_threads',), {})


def fitted_bundle(family='linear_ols', hyperparameters=None, thread_counts=(1, 2, 4, 8), n_shapes=40,
                  seed=0) -> ModelBundle:
    """A bundle trained on synthetic timings of random shapes up to 300 per dimension."""
    rng = np.random.default_rng(seed)
    shapes = [GemmShape(*(int(v) for v in rng.integers(16, 300, size=3))) for _ in range(n_shapes)]
    labeled = labeled_from_timings(synthetic_dataset(shapes, list(thread_counts), seed=seed))
    state, filtered, processed, _ = fit_preprocessing(labeled, {'lof_threshold': float('inf')})
    model = fit(family, processed, state.label_forward(filtered.y), hyperparameters or {}, state.kept_features)
    summary = {'family': family, 'rmse_s': 1.5e-4, 't_eval_s': 2e-5, 'est_speedup_no_overhead': 1.3,
               'est_speedup_with_overhead': 1.25, 'aggregate_speedup': 1.2, 'mean_speedup': 1.25}
    return ModelBundle(host_descriptor='synthetic-host', max_threads=max(thread_counts),
                       candidates=thread_counts, transform=state, model=model, selection_report=[summary],
                       mem_cap_bytes=4 * 3 * 300 ** 2, created_at='2024-01-01T00:00:00+00:00')


def pytest_addoption(parser):
    parser.addoption('--run-slow', action='store_true', default=False,
                     help='Run live end-to-end benchmarks')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running live measurement; needs --run-slow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--run-slow'):
        return
    skip = pytest.mark.skip(reason='needs --run-slow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def quiet_console():
    console.set_quiet(True)
    yield
    console.set_quiet(False)


@pytest.fixture
def native_backend():
    backend = NativeBackend(block_mc=32, block_kc=48, block_nc=64, affinity='none')
    yield backend
    backend.close()


@pytest.fixture
def small_shapes():
    return [GemmShape(16, 16, 16), GemmShape(32, 48, 24), GemmShape(64, 17, 33)]
