"""
Tests for benchmark and dataset reports
"""

import numpy as np
import pandas as pd
import pytest

from src.backend.matrix import GemmShape
from src.errors import ContractError, ParameterError, ParseError
from src.harness.timing import TimingDataset, TimingRecord
from src.report.reporting import (BENCH_COLUMNS, SUMMARY_KEYS, bucket_by_footprint, format_bench_report,
                                  generate_bench_report, generate_dataset_report, gflops_curves,
                                  heatmap_rows, make_bench_report, optimal_thread_histogram,
                                  optimal_thread_table, read_bench_rows, run_bench, speedup_summary,
                                  write_bench_report)
from src.runtime.predictor import Predictor

from conftest import curve_model, identity_thread_transform

GRID = [1, 2, 4, 8]


def dataset_with_optimum(shapes, best=4, grid=GRID):
    records = [TimingRecord(shape, t, abs(t - best) * 1e-3 + 1e-3, 10) for shape in shapes for t in grid]
    return TimingDataset(records=records, host_descriptor='h', max_threads=max(grid))


def bench_rows(footprints, speedups):
    n = len(footprints)
    t_adsala = np.full(n, 1e-3)
    return pd.DataFrame({
        'm': np.arange(n) + 10, 'k': np.full(n, 20), 'n': np.full(n, 30),
        'footprint_mb': footprints, 'chosen_threads': np.full(n, 2), 'max_threads': np.full(n, 8),
        't_adsala_s': t_adsala, 't_max_threads_s': t_adsala * np.asarray(speedups),
        'speedup': speedups, 'gflops_adsala': np.full(n, 10.0), 'gflops_max': 10.0 / np.asarray(speedups),
    }, columns=BENCH_COLUMNS)


@pytest.fixture
def shapes():
    return [GemmShape(16 * i, 32, 8 * i) for i in range(1, 13)]


class TestOptimalThreads:
    def test_all_mass_at_the_known_optimum(self, shapes):
        histogram = optimal_thread_histogram(dataset_with_optimum(shapes))
        assert list(histogram['n_threads']) == GRID
        assert list(histogram['count']) == [0, 0, len(shapes), 0]
        assert histogram['count'].sum() == len(shapes)

    def test_ties_go_to_fewer_threads(self):
        shape = GemmShape(8, 8, 8)
        dataset = TimingDataset(records=[TimingRecord(shape, t, 1e-3, 1) for t in GRID])
        assert optimal_thread_table(dataset)['optimal_threads'].tolist() == [1]

    def test_filter_on_smallest_dimension(self, shapes):
        table = optimal_thread_table(dataset_with_optimum(shapes), max_min_dim=64)
        assert len(table) == sum(1 for s in shapes if min(s.as_tuple()) < 64)
        assert (table[['m', 'k', 'n']].min(axis=1) < 64).all()

    def test_table_columns(self, shapes):
        table = optimal_thread_table(dataset_with_optimum(shapes))
        assert np.allclose(table['max_threads_runtime_s'], 5e-3)
        assert np.allclose(table['runtime_s'], 1e-3)

    def test_heatmap_rows(self, shapes):
        table = optimal_thread_table(dataset_with_optimum(shapes))
        heatmap = heatmap_rows(table, 'optimal_threads')
        assert len(heatmap) == len(shapes)
        assert list(heatmap.columns) == ['m', 'k', 'n', 'optimal_threads', 'sqrt_m', 'sqrt_k', 'sqrt_n']
        assert heatmap['sqrt_k'].iloc[0] == pytest.approx(np.sqrt(32))
        with pytest.raises(ContractError):
            heatmap_rows(table, 'speedup')

    def test_dataset_report_files(self, shapes, tmp_path, capsys):
        paths = generate_dataset_report(dataset_with_optimum(shapes), tmp_path / 'report')
        assert sorted(p.name for p in paths) == ['gflops_vs_footprint.csv', 'optimal_threads_heatmap.csv',
                                                 'optimal_threads_histogram.csv']
        assert all(p.exists() for p in paths)
        assert 'OPTIMAL THREAD COUNTS' in capsys.readouterr().out


class TestSpeedupStatistics:
    def test_matches_numpy(self):
        values = np.random.default_rng(0).lognormal(size=174)
        summary = speedup_summary(values)
        assert list(summary) == SUMMARY_KEYS
        assert summary['count'] == 174
        assert summary['std'] == pytest.approx(np.std(values, ddof=1))
        for key, q in (('p25', 25), ('p50', 50), ('p75', 75)):
            assert summary[key] == pytest.approx(np.percentile(values, q))

    def test_small_example(self):
        summary = speedup_summary([1.0, 2.0, 3.0, 4.0])
        assert summary['mean'] == 2.5
        assert summary['p25'] == pytest.approx(1.75)
        assert summary['p75'] == pytest.approx(3.25)
        assert summary['std'] == pytest.approx(1.2909944487)

    def test_single_and_empty(self):
        assert speedup_summary([1.5])['std'] == 0.0
        empty = speedup_summary([])
        assert empty['count'] == 0 and np.isnan(empty['mean'])

    def test_footprint_buckets(self):
        rows = bench_rows([50.0, 100.0, 150.0, 600.0], [1.0, 2.0, 3.0, 4.0])
        buckets = bucket_by_footprint(rows)
        assert list(buckets) == ['0-100 MB', '100-500 MB']
        assert buckets['0-100 MB']['count'] == 2
        assert buckets['0-100 MB']['mean'] == 1.5
        assert buckets['100-500 MB']['count'] == 1
        with pytest.raises(ParameterError):
            bucket_by_footprint(rows, [(10, 10)])

    def test_report_text_and_files(self, tmp_path):
        report = make_bench_report(bench_rows([10.0, 20.0, 300.0], [1.2, 0.9, 1.5]))
        text = format_bench_report(report)
        assert 'ADSALA BENCHMARK' in text and '## All shapes' in text and '## 100-500 MB' in text
        rows_path, summary_path = write_bench_report(report, tmp_path / 'bench')
        summary = pd.read_csv(summary_path)
        assert list(summary['scope']) == ['all', '0-100 MB', '100-500 MB']
        assert list(summary['count']) == [3, 2, 1]
        reread = read_bench_rows(rows_path)
        assert list(reread.columns) == BENCH_COLUMNS
        assert reread['speedup'].tolist() == pytest.approx([1.2, 0.9, 1.5])

    def test_gflops_curves(self):
        rows = bench_rows(np.linspace(1, 400, 40), np.full(40, 1.25))
        curves = gflops_curves(rows, bins=5)
        assert list(curves.columns) == ['footprint_mb', 'gflops_adsala', 'gflops_max', 'shapes']
        assert curves['shapes'].sum() == 40
        assert curves['footprint_mb'].is_monotonic_increasing
        assert np.allclose(curves['gflops_max'], 8.0)
        assert gflops_curves(rows.iloc[:0]).empty

    def test_bench_plot_data(self, tmp_path, capsys):
        rows = bench_rows([10.0, 20.0], [1.1, 1.3])
        paths = generate_bench_report(rows, tmp_path)
        assert sorted(p.name for p in paths) == ['gflops_vs_footprint.csv', 'speedup_heatmap.csv']
        assert 'Aggregate speedup' in capsys.readouterr().out


class TestReadBenchRows:
    def test_bad_value_names_line(self, tmp_path):
        path = tmp_path / 'bench_rows.csv'
        bench_rows([10.0, 20.0], [1.0, 1.1]).to_csv(path, index=False)
        lines = path.read_text().splitlines()
        lines[2] = lines[2].replace('1.1', 'fast', 1)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as info:
            read_bench_rows(path)
        assert info.value.line == 3

    def test_missing_file_and_columns(self, tmp_path):
        with pytest.raises(ParseError):
            read_bench_rows(tmp_path / 'absent.csv')
        path = tmp_path / 'partial.csv'
        path.write_text("m,k,n\n1,2,3\n")
        with pytest.raises(ParseError):
            read_bench_rows(path)


class TestRunBench:
    def test_tiny_live_bench(self, native_backend):
        predictor = Predictor(curve_model(float), identity_thread_transform(), [1, 2, 4, 8],
                              backend=native_backend, max_threads=8)
        shapes = [GemmShape(16, 16, 16), GemmShape(24, 40, 8)]
        report = run_bench(predictor, shapes, repeats=2, warmup=0)
        assert len(report.rows) == 2
        assert (report.rows['chosen_threads'] == 1).all()
        assert (report.rows['speedup'] > 0).all()
        assert report.summary['count'] == 2
        assert predictor.stats_snapshot()['evaluations'] == 4

    def test_needs_shapes(self, native_backend):
        predictor = Predictor(curve_model(float), identity_thread_transform(), [1], backend=native_backend,
                              max_threads=1)
        with pytest.raises(ParameterError):
            run_bench(predictor, [])
