"""
Benchmark and dataset reports

Bench: ADSALA thread selection vs always-max-threads on a shape set, with
speedup statistics overall and per memory-footprint bucket.
Dataset: per-shape optimal thread counts, heatmap triples and GFLOPS curves.
All outputs are plain CSV plus a console summary.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.backend.matrix import GemmParams, GemmShape, alloc_aligned_matrix, memory_footprint
from src.errors import ContractError, ParameterError, ParseError
from src.harness.timing import TimingDataset, aggregate_samples
from src.runtime.predictor import Predictor
from src.utils import console

MIB = 2 ** 20
BENCH_COLUMNS = ['m', 'k', 'n', 'footprint_mb', 'chosen_threads', 'max_threads', 't_adsala_s',
                 't_max_threads_s', 'speedup', 'gflops_adsala', 'gflops_max']
SUMMARY_KEYS = ['count', 'mean', 'std', 'min', 'p25', 'p50', 'p75', 'max']
DEFAULT_BUCKETS_MB: Tuple[Tuple[float, float], ...] = ((0, 100), (100, 500))


@dataclass
class BenchReport:
    """Per-shape benchmark rows and speedup summaries."""

    rows: pd.DataFrame
    summary: Dict[str, float]
    buckets: Dict[str, Dict[str, float]] = field(default_factory=dict)


def speedup_summary(speedups: Sequence[float]) -> Dict[str, float]:
    """Count, mean, sample std, min, quartiles and max (linear-interpolated percentiles)."""
    values = np.asarray(speedups, dtype=np.float64)
    if values.size == 0:
        return {key: (0 if key == 'count' else float('nan')) for key in SUMMARY_KEYS}
    p25, p50, p75 = np.percentile(values, [25, 50, 75])
    return {
        'count': int(values.size),
        'mean': float(values.mean()),
        'std': float(values.std(ddof=1)) if values.size > 1 else 0.0,
        'min': float(values.min()),
        'p25': float(p25),
        'p50': float(p50),
        'p75': float(p75),
        'max': float(values.max()),
    }


def bucket_label(bounds: Sequence[float]) -> str:
    lo, hi = bounds
    return f"{lo:g}-{hi:g} MB"


def bucket_by_footprint(rows: pd.DataFrame,
                        buckets: Sequence[Sequence[float]] = DEFAULT_BUCKETS_MB) -> Dict[str, Dict[str, float]]:
    """Speedup summary of the rows whose footprint falls in (lo, hi] MB (lo inclusive for 0)."""
    result = {}
    for lo, hi in buckets:
        if hi <= lo:
            raise ParameterError(f"Footprint bucket ({lo}, {hi}) is empty")
        footprint = rows['footprint_mb']
        mask = (footprint <= hi) & ((footprint > lo) | (lo <= 0))
        result[bucket_label((lo, hi))] = speedup_summary(rows.loc[mask, 'speedup'])
    return result


def make_bench_report(rows: pd.DataFrame,
                      buckets: Sequence[Sequence[float]] = DEFAULT_BUCKETS_MB) -> BenchReport:
    rows = rows.reset_index(drop=True)
    return BenchReport(rows=rows, summary=speedup_summary(rows['speedup']),
                       buckets=bucket_by_footprint(rows, buckets))


def _time_calls(call, repeats: int, warmup: int, statistic: str) -> float:
    for _ in range(warmup):
        call()
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        call()
        samples.append(time.perf_counter() - start)
    return max(aggregate_samples(samples, statistic), 1e-9)


def run_bench(predictor: Predictor, shapes: Sequence[GemmShape], repeats: int = 10, warmup: int = 1,
              statistic: str = 'median', alignment: int = 64, seed: int = 0,
              buckets: Sequence[Sequence[float]] = DEFAULT_BUCKETS_MB,
              baseline_threads: Optional[int] = None) -> BenchReport:
    """
    Time adsala_gemm against plain GEMM at the maximum thread count.

    The predictor's cache is cleared before every timed adsala call, so each
    sample includes one model evaluation. All adsala calls for a shape run
    before its baseline calls, so the worker pool is resized once per variant.
    """
    if not shapes:
        raise ParameterError("Benchmark needs at least one shape")
    backend = predictor.backend
    baseline_threads = baseline_threads or min(predictor.max_threads, backend.max_threads)

    rows = []
    for index, shape in enumerate(shapes, 1):
        A = alloc_aligned_matrix(shape.m, shape.k, alignment, 'uniform', seed)
        B = alloc_aligned_matrix(shape.k, shape.n, alignment, 'uniform', seed + 1)
        C = alloc_aligned_matrix(shape.m, shape.n, alignment, 'zeros')
        decisions = []

        def adsala_call():
            predictor.clear_cache()
            decisions.append(predictor.adsala_gemm(shape, A, B, C)[1])

        baseline_params = GemmParams(alpha=1.0, beta=0.0, n_threads=baseline_threads)

        def baseline_call():
            backend.gemm(shape, baseline_params, A, B, C)

        t_adsala = _time_calls(adsala_call, repeats, warmup, statistic)
        t_max = _time_calls(baseline_call, repeats, warmup, statistic)
        chosen = decisions[-1].n_threads
        rows.append({'m': shape.m, 'k': shape.k, 'n': shape.n,
                     'footprint_mb': memory_footprint(shape) / MIB,
                     'chosen_threads': chosen, 'max_threads': baseline_threads,
                     't_adsala_s': t_adsala, 't_max_threads_s': t_max, 'speedup': t_max / t_adsala,
                     'gflops_adsala': shape.flops / t_adsala / 1e9, 'gflops_max': shape.flops / t_max / 1e9})
        console.progress(f"Benchmarked {index}/{len(shapes)} shape(s)")
    console.progress(f"Benchmarked {len(shapes)} shape(s)\n")
    return make_bench_report(pd.DataFrame(rows, columns=BENCH_COLUMNS), buckets)


def read_bench_rows(path: Path) -> pd.DataFrame:
    """Read a bench CSV written by write_bench_report."""
    path = Path(path)
    if not path.exists():
        raise ParseError("bench report not found", path=str(path))
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"unreadable CSV: {e}", path=str(path))
    missing = [c for c in BENCH_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"missing column(s) {missing}", path=str(path), line=1)
    for offset, row in enumerate(frame[BENCH_COLUMNS].itertuples(index=False)):
        for name, value in zip(BENCH_COLUMNS, row):
            try:
                number = float(value)
            except ValueError:
                raise ParseError(f"{name} is not a number: {value!r}", path=str(path), line=offset + 2)
            if not np.isfinite(number) or (name != 'footprint_mb' and number <= 0):
                raise ParseError(f"{name} must be positive and finite, got {value!r}",
                                 path=str(path), line=offset + 2)
    return frame[BENCH_COLUMNS].astype(float).astype({c: 'int64' for c in
                                                      ('m', 'k', 'n', 'chosen_threads', 'max_threads')})


def write_bench_report(report: BenchReport, out_dir: Path) -> List[Path]:
    """bench_rows.csv and bench_summary.csv (one row per scope)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows_path = out_dir / 'bench_rows.csv'
    summary_path = out_dir / 'bench_summary.csv'
    report.rows.to_csv(rows_path, index=False, float_format='%.9g')
    scopes = [{'scope': 'all', **report.summary}]
    scopes += [{'scope': label, **summary} for label, summary in report.buckets.items()]
    pd.DataFrame(scopes, columns=['scope'] + SUMMARY_KEYS).to_csv(summary_path, index=False,
                                                                 float_format='%.6g')
    return [rows_path, summary_path]


def format_bench_report(report: BenchReport) -> str:
    lines = ["", "=" * 80, "ADSALA BENCHMARK", "=" * 80]

    def section(title: str, summary: Dict[str, float]):
        lines.append(f"\n## {title}")
        if not summary['count']:
            lines.append("  (no shapes)")
            return
        lines.append(f"  Shapes: {summary['count']}")
        lines.append(f"  Speedup mean {summary['mean']:.3f}  std {summary['std']:.3f}")
        lines.append(f"  min {summary['min']:.3f}  p25 {summary['p25']:.3f}  p50 {summary['p50']:.3f}  "
                     f"p75 {summary['p75']:.3f}  max {summary['max']:.3f}")

    section("All shapes", report.summary)
    for label, summary in report.buckets.items():
        section(label, summary)
    if len(report.rows):
        total = report.rows['t_max_threads_s'].sum() / report.rows['t_adsala_s'].sum()
        lines.append(f"\nAggregate speedup: {total:.3f}x")
    return "\n".join(lines)


def optimal_thread_table(dataset: TimingDataset, max_min_dim: Optional[int] = None) -> pd.DataFrame:
    """
    Fastest measured thread count per shape (ties go to fewer threads).

    Args:
        dataset: Timing dataset
        max_min_dim: Keep only shapes with at least one dimension below this value
    """
    rows = []
    for shape, measured in dataset.runtimes_by_shape().items():
        if max_min_dim is not None and min(shape.as_tuple()) >= max_min_dim:
            continue
        best = min(measured, key=lambda t: (measured[t], t))
        rows.append({'m': shape.m, 'k': shape.k, 'n': shape.n, 'optimal_threads': best,
                     'runtime_s': measured[best],
                     'max_threads_runtime_s': measured[max(measured)],
                     'footprint_mb': memory_footprint(shape) / MIB})
    return pd.DataFrame(rows, columns=['m', 'k', 'n', 'optimal_threads', 'runtime_s',
                                       'max_threads_runtime_s', 'footprint_mb'])


def optimal_thread_histogram(dataset: TimingDataset, max_min_dim: Optional[int] = None) -> pd.DataFrame:
    """Number of shapes whose fastest count is each measured thread count."""
    table = optimal_thread_table(dataset, max_min_dim)
    counts = table['optimal_threads'].value_counts()
    grid = dataset.thread_counts()
    return pd.DataFrame({'n_threads': grid, 'count': [int(counts.get(t, 0)) for t in grid]})


def heatmap_rows(table: pd.DataFrame, value_column: str) -> pd.DataFrame:
    """(m, k, n, value) triples with square-root axis coordinates for plotting."""
    if value_column not in table.columns:
        raise ContractError(f"Column {value_column!r} not in table")
    frame = table[['m', 'k', 'n', value_column]].copy()
    for dim in ('m', 'k', 'n'):
        frame[f"sqrt_{dim}"] = np.sqrt(frame[dim].astype(float))
    return frame


def gflops_curves(rows: pd.DataFrame, bins: int = 10) -> pd.DataFrame:
    """Mean GFLOPS of adsala and max-thread runs per equal-width footprint bin."""
    if rows.empty:
        return pd.DataFrame(columns=['footprint_mb', 'gflops_adsala', 'gflops_max', 'shapes'])
    bins = max(1, min(bins, len(rows)))
    binned = rows.assign(bin=pd.cut(rows['footprint_mb'], bins=bins))
    curves = binned.groupby('bin', observed=True).agg(
        gflops_adsala=('gflops_adsala', 'mean'),
        gflops_max=('gflops_max', 'mean'),
        shapes=('gflops_adsala', 'size'),
    ).reset_index()
    curves.insert(0, 'footprint_mb', [float(interval.mid) for interval in curves['bin']])
    curves = curves.drop(columns='bin')
    return curves.sort_values('footprint_mb').reset_index(drop=True)


def dataset_gflops_curves(table: pd.DataFrame, bins: int = 10) -> pd.DataFrame:
    """GFLOPS curves from measured grids: best count vs max count."""
    flops = 2.0 * table['m'] * table['k'] * table['n']
    rows = pd.DataFrame({'footprint_mb': table['footprint_mb'],
                         'gflops_adsala': flops / table['runtime_s'] / 1e9,
                         'gflops_max': flops / table['max_threads_runtime_s'] / 1e9})
    return gflops_curves(rows, bins)


def generate_dataset_report(dataset: TimingDataset, out_dir: Path,
                            max_min_dim: Optional[int] = None) -> List[Path]:
    """Histogram, heatmap and GFLOPS CSVs for a timing dataset."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = optimal_thread_table(dataset, max_min_dim)
    outputs = {
        'optimal_threads_histogram.csv': optimal_thread_histogram(dataset, max_min_dim),
        'optimal_threads_heatmap.csv': heatmap_rows(table, 'optimal_threads'),
        'gflops_vs_footprint.csv': dataset_gflops_curves(table),
    }
    paths = []
    for name, frame in outputs.items():
        frame.to_csv(out_dir / name, index=False, float_format='%.6g')
        paths.append(out_dir / name)

    print("\n" + "=" * 80)
    print("OPTIMAL THREAD COUNTS")
    print("=" * 80)
    print(f"Shapes: {len(table):,}")
    for row in outputs['optimal_threads_histogram.csv'].itertuples(index=False):
        if row.count:
            print(f"  {row.n_threads:>4} thread(s): {row.count:,}")
    return paths


def generate_bench_report(rows: pd.DataFrame, out_dir: Path,
                          buckets: Sequence[Sequence[float]] = DEFAULT_BUCKETS_MB) -> List[Path]:
    """Speedup heatmap and GFLOPS CSVs for bench rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = make_bench_report(rows, buckets)
    outputs = {
        'speedup_heatmap.csv': heatmap_rows(rows, 'speedup'),
        'gflops_vs_footprint.csv': gflops_curves(rows),
    }
    paths = []
    for name, frame in outputs.items():
        frame.to_csv(out_dir / name, index=False, float_format='%.6g')
        paths.append(out_dir / name)
    print(format_bench_report(report))
    return paths
