"""
GEMM timing: records, datasets and the repeat-and-aggregate protocol
"""

import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.backend.base import GemmBackend
from src.backend.matrix import GemmParams, GemmShape, alloc_aligned_matrix, validate_threads
from src.errors import ContractError, ParameterError
from src.utils.host import host_descriptor, logical_cores, physical_cores

STATISTICS = ('median', 'mean')
DATASET_COLUMNS = ['m', 'k', 'n', 'n_threads', 'runtime_s', 'repeats', 'statistic']

RecordKey = Tuple[int, int, int, int]


@dataclass
class TimingRecord:
    """One measured (shape, thread count) -> runtime observation."""

    shape: GemmShape
    n_threads: int
    runtime_s: float
    repeats: int
    statistic: str = 'median'
    samples: List[float] = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        if not (self.runtime_s > 0 and np.isfinite(self.runtime_s)):
            raise ContractError(f"runtime_s must be positive and finite, got {self.runtime_s}")
        if self.repeats < 1:
            raise ContractError(f"repeats must be >= 1, got {self.repeats}")
        if self.n_threads < 1:
            raise ContractError(f"n_threads must be >= 1, got {self.n_threads}")
        if self.statistic not in STATISTICS:
            raise ContractError(f"statistic must be one of {STATISTICS}, got {self.statistic!r}")

    @property
    def key(self) -> RecordKey:
        return (self.shape.m, self.shape.k, self.shape.n, self.n_threads)

    @property
    def gflops(self) -> float:
        return self.shape.flops / self.runtime_s / 1e9


@dataclass
class TimingDataset:
    """Timings gathered on one host; each (shape, n_threads) appears at most once."""

    records: List[TimingRecord] = field(default_factory=list)
    host_descriptor: str = ''
    max_threads: int = 1
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec='seconds'))

    def __post_init__(self):
        records, self.records = self.records, []
        self._keys = set()
        for record in records:
            self.add(record)

    def add(self, record: TimingRecord) -> None:
        if record.key in self._keys:
            raise ContractError(f"Duplicate timing for shape {record.shape} with {record.n_threads} thread(s)")
        self._keys.add(record.key)
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, key: RecordKey) -> bool:
        return key in self._keys

    def shapes(self) -> List[GemmShape]:
        """Distinct shapes in first-seen order."""
        seen = {}
        for record in self.records:
            seen.setdefault(record.shape, None)
        return list(seen)

    def thread_counts(self) -> List[int]:
        return sorted({record.n_threads for record in self.records})

    def runtimes_by_shape(self) -> Dict[GemmShape, Dict[int, float]]:
        table: Dict[GemmShape, Dict[int, float]] = {}
        for record in self.records:
            table.setdefault(record.shape, {})[record.n_threads] = record.runtime_s
        return table

    def restricted_to(self, shapes: Iterable[GemmShape]) -> 'TimingDataset':
        wanted = set(shapes)
        return TimingDataset(records=[r for r in self.records if r.shape in wanted],
                             host_descriptor=self.host_descriptor,
                             max_threads=self.max_threads, created_at=self.created_at)

    def to_frame(self) -> pd.DataFrame:
        rows = [{'m': r.shape.m, 'k': r.shape.k, 'n': r.shape.n, 'n_threads': r.n_threads,
                 'runtime_s': r.runtime_s, 'repeats': r.repeats, 'statistic': r.statistic}
                for r in self.records]
        return pd.DataFrame(rows, columns=DATASET_COLUMNS)


def aggregate_samples(samples: List[float], statistic: str = 'median') -> float:
    if not samples:
        raise ParameterError("Cannot aggregate an empty sample list")
    if statistic == 'median':
        return float(np.median(samples))
    if statistic == 'mean':
        return float(np.mean(samples))
    raise ParameterError(f"statistic must be one of {STATISTICS}, got {statistic!r}")


def time_gemm(shape: GemmShape, n_threads: int, backend: GemmBackend, repeats: int = 10,
              warmup: int = 1, statistic: str = 'median', alignment: int = 64,
              seed: int = 0) -> TimingRecord:
    """
    Time repeated alpha=1, beta=0 GEMM calls on freshly allocated random operands.

    Args:
        shape: GEMM dimensions
        n_threads: Worker threads for every call
        backend: Backend that executes the calls
        repeats: Timed calls
        warmup: Untimed calls made first
        statistic: 'median' or 'mean' of the per-call wall times
        alignment: Operand alignment in bytes
        seed: Seed of the random operand fill

    Returns:
        TimingRecord whose runtime_s is the per-call statistic
    """
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    if warmup < 0:
        raise ParameterError(f"warmup must be >= 0, got {warmup}")
    validate_threads(n_threads, backend.max_threads)

    A = alloc_aligned_matrix(shape.m, shape.k, alignment, 'uniform', seed)
    B = alloc_aligned_matrix(shape.k, shape.n, alignment, 'uniform', seed + 1)
    C = alloc_aligned_matrix(shape.m, shape.n, alignment, 'zeros')
    params = GemmParams(alpha=1.0, beta=0.0, n_threads=n_threads)

    for _ in range(warmup):
        backend.gemm(shape, params, A, B, C)

    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        backend.gemm(shape, params, A, B, C)
        samples.append(time.perf_counter() - start)

    # perf_counter can report 0 for sub-resolution calls
    runtime = max(aggregate_samples(samples, statistic), 1e-9)
    return TimingRecord(shape=shape, n_threads=n_threads, runtime_s=runtime,
                        repeats=repeats, statistic=statistic, samples=samples)


def default_thread_grid(physical: Optional[int] = None, logical: Optional[int] = None) -> List[int]:
    """
    Every count 1..physical, then physical + 1, 2, 4, ... up to the logical maximum.
    """
    physical = physical or physical_cores()
    logical = logical or logical_cores()
    physical = min(physical, logical)
    grid = list(range(1, physical + 1))
    step = 1
    while physical + step < logical:
        grid.append(physical + step)
        step *= 2
    if logical > physical:
        grid.append(logical)
    return grid


def new_dataset(max_threads: Optional[int] = None) -> TimingDataset:
    return TimingDataset(host_descriptor=host_descriptor(),
                         max_threads=max_threads or logical_cores())
