"""
GEMM timing harness

Gathering lives in src.harness.gather and the per-thread-count worker in
src.harness.worker; both import the dataset file layer, so they are not
re-exported here.
"""

from .timing import (TimingRecord, TimingDataset, DATASET_COLUMNS, time_gemm,
                     aggregate_samples, default_thread_grid, new_dataset)

__all__ = ['TimingRecord', 'TimingDataset', 'DATASET_COLUMNS', 'time_gemm',
           'aggregate_samples', 'default_thread_grid', 'new_dataset']
