"""
Benchmark and dataset reporting
"""

from .reporting import (BenchReport, speedup_summary, bucket_by_footprint, make_bench_report, run_bench,
                        read_bench_rows, write_bench_report, format_bench_report, optimal_thread_table,
                        optimal_thread_histogram, heatmap_rows, gflops_curves, generate_dataset_report,
                        generate_bench_report)

__all__ = ['BenchReport', 'speedup_summary', 'bucket_by_footprint', 'make_bench_report', 'run_bench',
           'read_bench_rows', 'write_bench_report', 'format_bench_report', 'optimal_thread_table',
           'optimal_thread_histogram', 'heatmap_rows', 'gflops_curves', 'generate_dataset_report',
           'generate_bench_report']
