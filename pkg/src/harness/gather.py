"""
Dataset gathering across shapes and thread counts

Each thread count runs in its own worker process (subprocess isolation) so a
process never changes its pool size mid-run. Records are appended to the
dataset file as they are measured, which makes gathering resumable.
"""

import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from src.backend.backend_manager import create_backend
from src.backend.matrix import GemmShape
from src.bundle.dataset_io import (append_record, init_dataset_file, metadata_path,
                                   read_dataset, read_metadata, write_shapes)
from src.errors import ContractError, GatheringError, ParameterError
from src.harness.timing import TimingDataset, new_dataset, time_gemm
from src.utils import console
from src.utils.host import logical_cores

PROJECT_ROOT = Path(__file__).parent.parent.parent
ISOLATION_MODES = ('subprocess', 'in_process')


def _key(shape: GemmShape, n_threads: int):
    return (shape.m, shape.k, shape.n, n_threads)


def _pending(shapes: Sequence[GemmShape], n_threads: int, done, skipped) -> List[GemmShape]:
    return [s for s in shapes
            if _key(s, n_threads) not in done and _key(s, n_threads) not in skipped]


def _worker_command(shapes_file: Path, n_threads: int, out_path: Path,
                    harness_config: Dict, backend_config: Dict) -> List[str]:
    return [
        sys.executable, '-m', 'src.harness.worker',
        '--shapes', str(shapes_file),
        '--threads', str(n_threads),
        '--out', str(out_path),
        '--repeats', str(harness_config.get('repeats', 10)),
        '--warmup', str(harness_config.get('warmup', 1)),
        '--statistic', harness_config.get('statistic', 'median'),
        '--affinity', backend_config.get('affinity', 'cores'),
        '--block-mc', str(backend_config.get('block_mc', 128)),
        '--block-kc', str(backend_config.get('block_kc', 256)),
        '--block-nc', str(backend_config.get('block_nc', 512)),
        '--alignment', str(backend_config.get('alignment', 64)),
    ]


def _gather_thread_count_subprocess(shapes: Sequence[GemmShape], n_threads: int, out_path: Path,
                                    harness_config: Dict, backend_config: Dict,
                                    skipped: set) -> None:
    """Run workers for one thread count, skipping the shape a crashed worker was on."""
    with tempfile.TemporaryDirectory(prefix='adsala-gather-') as tmp:
        shapes_file = Path(tmp) / f"shapes_t{n_threads}.csv"
        while True:
            done = {r.key for r in read_dataset(out_path).records}
            pending = _pending(shapes, n_threads, done, skipped)
            if not pending:
                return
            write_shapes(pending, shapes_file)
            command = _worker_command(shapes_file, n_threads, out_path, harness_config, backend_config)
            result = subprocess.run(command, cwd=str(PROJECT_ROOT), capture_output=True, text=True)
            if result.returncode == 0:
                continue

            done = {r.key for r in read_dataset(out_path).records}
            remaining = _pending(shapes, n_threads, done, skipped)
            if not remaining:
                return
            failed = remaining[0]
            skipped.add(_key(failed, n_threads))
            detail = (result.stderr or '').strip().splitlines()
            console.warning(
                f"Worker for {n_threads} thread(s) exited with code {result.returncode} on shape "
                f"{failed}; record skipped" + (f" ({detail[-1]})" if detail else "")
            )


def _gather_thread_count_in_process(shapes: Sequence[GemmShape], n_threads: int,
                                    out_path: Optional[Path], dataset: TimingDataset,
                                    harness_config: Dict, backend_config: Dict,
                                    skipped: set) -> None:
    backend = create_backend(backend_config)
    try:
        backend.set_threads(n_threads)
        for shape in _pending(shapes, n_threads, {r.key for r in dataset.records}, skipped):
            try:
                record = time_gemm(shape, n_threads, backend,
                                   repeats=harness_config.get('repeats', 10),
                                   warmup=harness_config.get('warmup', 1),
                                   statistic=harness_config.get('statistic', 'median'),
                                   alignment=backend_config.get('alignment', 64))
            except (MemoryError, ArithmeticError, ValueError) as e:
                skipped.add(_key(shape, n_threads))
                console.warning(f"Timing {shape} with {n_threads} thread(s) failed: {e}; record skipped")
                continue
            dataset.add(record)
            if out_path is not None:
                append_record(out_path, record)
    finally:
        backend.close()


def gather_dataset(shapes: Sequence[GemmShape], thread_counts: Sequence[int],
                   isolation: str = 'subprocess', out_path: Optional[Path] = None,
                   harness_config: Optional[Dict] = None,
                   backend_config: Optional[Dict] = None) -> TimingDataset:
    """
    Time every shape at every thread count.

    Args:
        shapes: Shapes to time
        thread_counts: Thread counts; each runs in one dedicated process in subprocess mode
        isolation: 'subprocess' (default) or 'in_process'
        out_path: Dataset CSV; existing records are kept and not re-timed
        harness_config: 'harness' configuration section
        backend_config: 'backend' configuration section

    Returns:
        TimingDataset with all gathered records
    """
    if not shapes or not thread_counts:
        raise ParameterError("gather_dataset needs at least one shape and one thread count")
    if isolation not in ISOLATION_MODES:
        raise ParameterError(f"isolation must be one of {ISOLATION_MODES}, got {isolation!r}")
    harness_config = harness_config or {}
    backend_config = backend_config or {'type': 'native', 'affinity': 'cores'}
    thread_counts = sorted({int(t) for t in thread_counts})
    host_max = logical_cores()
    if thread_counts[0] < 1 or thread_counts[-1] > host_max:
        raise ParameterError(f"Thread counts must be in [1, {host_max}], got {thread_counts}")

    owned_tmp = None
    if out_path is None and isolation == 'subprocess':
        owned_tmp = tempfile.TemporaryDirectory(prefix='adsala-dataset-')
        out_path = Path(owned_tmp.name) / 'dataset.csv'

    try:
        dataset = new_dataset(max(host_max, thread_counts[-1]))
        if out_path is not None:
            out_path = Path(out_path)
            if metadata_path(out_path).exists():
                host = read_metadata(metadata_path(out_path)).get('host')
                if host and host != dataset.host_descriptor:
                    raise ContractError(
                        f"{out_path} was gathered on a different host ({host}); use a new output file"
                    )
            init_dataset_file(out_path, dataset.host_descriptor, dataset.max_threads, dataset.created_at)
            existing = read_dataset(out_path)
            for record in existing.records:
                dataset.add(record)
            if existing.records:
                console.info(f"Resuming: {len(existing.records)} record(s) already in {out_path}")

        total = len(shapes) * len(thread_counts)
        skipped: set = set()
        for index, n_threads in enumerate(thread_counts, 1):
            console.info(f"[{index}/{len(thread_counts)}] Timing {len(shapes)} shape(s) "
                         f"with {n_threads} thread(s) ({isolation})")
            if isolation == 'subprocess':
                _gather_thread_count_subprocess(shapes, n_threads, out_path, harness_config,
                                                backend_config, skipped)
            else:
                _gather_thread_count_in_process(shapes, n_threads, out_path, dataset,
                                                harness_config, backend_config, skipped)

        if isolation == 'subprocess':
            gathered = read_dataset(out_path)
            dataset = TimingDataset(records=gathered.records, host_descriptor=dataset.host_descriptor,
                                    max_threads=dataset.max_threads, created_at=dataset.created_at)

        wanted = {_key(s, t) for s in shapes for t in thread_counts}
        dataset = TimingDataset(records=[r for r in dataset.records if r.key in wanted],
                                host_descriptor=dataset.host_descriptor,
                                max_threads=dataset.max_threads, created_at=dataset.created_at)

        max_skip = float(harness_config.get('max_skip_fraction', 0.10))
        if skipped:
            console.warning(f"{len(skipped)} of {total} timing(s) skipped")
        if len(skipped) > max_skip * total:
            raise GatheringError(
                f"{len(skipped)} of {total} timings failed (limit {max_skip:.0%}); "
                f"check memory limits and machine load"
            )
        console.success(f"Gathered {len(dataset)} record(s)")
        return dataset
    finally:
        if owned_tmp is not None:
            owned_tmp.cleanup()


def affinity_sweep(shapes: Sequence[GemmShape], thread_counts: Sequence[int],
                   policies: Sequence[str] = ('cores', 'threads'), isolation: str = 'subprocess',
                   out_dir: Optional[Path] = None, harness_config: Optional[Dict] = None,
                   backend_config: Optional[Dict] = None) -> pd.DataFrame:
    """
    Time the same shapes under several affinity policies.

    Returns:
        DataFrame with columns policy, n_threads, mean_runtime_s, shapes
    """
    backend_config = dict(backend_config or {'type': 'native'})
    rows = []
    for policy in policies:
        console.info(f"Affinity policy: {policy}")
        policy_out = None if out_dir is None else Path(out_dir) / f"dataset_{policy}.csv"
        dataset = gather_dataset(shapes, thread_counts, isolation=isolation, out_path=policy_out,
                                 harness_config=harness_config,
                                 backend_config={**backend_config, 'affinity': policy})
        frame = dataset.to_frame()
        summary = frame.groupby('n_threads')['runtime_s'].agg(['mean', 'count']).reset_index()
        for row in summary.itertuples(index=False):
            rows.append({'policy': policy, 'n_threads': int(row.n_threads),
                         'mean_runtime_s': float(row.mean), 'shapes': int(row.count)})
    return pd.DataFrame(rows, columns=['policy', 'n_threads', 'mean_runtime_s', 'shapes'])
