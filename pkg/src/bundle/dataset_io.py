"""
Dataset and shape file I/O

Timing datasets are CSV files with header m,k,n,n_threads,runtime_s,repeats,statistic
and a '<file>.meta' sidecar of key=value lines (host, max_threads, created_at).
Records are appended and flushed one at a time so an interrupted gathering run
loses at most the record being written.
"""

import io
import math
import os
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO

import pandas as pd

from src.backend.matrix import GemmShape
from src.errors import ParseError, ShapeError
from src.harness.timing import DATASET_COLUMNS, TimingDataset, TimingRecord
from src.utils import console

SHAPE_COLUMNS = ['m', 'k', 'n']


def metadata_path(dataset_path: Path) -> Path:
    dataset_path = Path(dataset_path)
    return dataset_path.with_name(dataset_path.name + '.meta')


def write_metadata(path: Path, values: Dict[str, str]) -> None:
    """Write key=value lines, sorted by key."""
    lines = [f"{key}={values[key]}" for key in sorted(values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_metadata(path: Path) -> Dict[str, str]:
    values = {}
    path = Path(path)
    for line_number, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise ParseError("expected key=value", path=str(path), line=line_number)
        key, value = line.split('=', 1)
        values[key.strip()] = value.strip()
    return values


def format_record(record: TimingRecord) -> str:
    return (f"{record.shape.m},{record.shape.k},{record.shape.n},{record.n_threads},"
            f"{record.runtime_s!r},{record.repeats},{record.statistic}\n")


def init_dataset_file(path: Path, host: str, max_threads: int, created_at: str) -> None:
    """Create the CSV header and sidecar unless the dataset already exists."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not path.exists() or path.stat().st_size == 0:
        with open(path, 'w') as f:
            f.write(",".join(DATASET_COLUMNS) + "\n")
    meta = metadata_path(path)
    if not meta.exists():
        write_metadata(meta, {'host': host, 'max_threads': str(max_threads),
                              'created_at': created_at})


def append_record(path: Path, record: TimingRecord) -> None:
    """Append one record and flush it to disk."""
    with open(path, 'a') as f:
        f.write(format_record(record))
        f.flush()
        os.fsync(f.fileno())


def write_dataset(dataset: TimingDataset, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        f.write(",".join(DATASET_COLUMNS) + "\n")
        for record in dataset.records:
            f.write(format_record(record))
    write_metadata(metadata_path(path), {'host': dataset.host_descriptor,
                                         'max_threads': str(dataset.max_threads),
                                         'created_at': dataset.created_at})


def _read_complete_lines(path: Path) -> str:
    """File text without a trailing partially written line."""
    text = Path(path).read_text()
    if text and not text.endswith("\n"):
        cut = text.rfind("\n")
        console.warning(f"{path}: ignoring partially written last line")
        text = text[:cut + 1] if cut >= 0 else ""
    return text


def _int_field(value, name: str, path: Path, line: int) -> int:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"column '{name}' is not a number: {value!r}", path=str(path), line=line)
    if not math.isfinite(number):
        raise ParseError(f"column '{name}' is not finite: {value!r}", path=str(path), line=line)
    if number != int(number):
        raise ParseError(f"column '{name}' is not an integer: {value!r}", path=str(path), line=line)
    return int(number)


def read_dataset(path: Path) -> TimingDataset:
    """
    Load a timing dataset and its sidecar.

    Repeated (shape, n_threads) rows keep the first occurrence. Malformed rows
    raise ParseError naming the 1-based file line.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("dataset file not found", path=str(path))
    text = _read_complete_lines(path)
    if not text.strip():
        raise ParseError("dataset file is empty", path=str(path), line=1)

    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed CSV: {e}", path=str(path))
    missing = [c for c in DATASET_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"missing column(s): {', '.join(missing)}", path=str(path), line=1)

    meta = {}
    if metadata_path(path).exists():
        meta = read_metadata(metadata_path(path))

    dataset = TimingDataset(host_descriptor=meta.get('host', ''),
                            max_threads=int(meta.get('max_threads', 1)))
    if 'created_at' in meta:
        dataset.created_at = meta['created_at']

    duplicates = 0
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        values = row._asdict()
        try:
            shape = GemmShape(_int_field(values['m'], 'm', path, line),
                              _int_field(values['k'], 'k', path, line),
                              _int_field(values['n'], 'n', path, line))
            runtime = float(values['runtime_s'])
            record = TimingRecord(shape=shape,
                                  n_threads=_int_field(values['n_threads'], 'n_threads', path, line),
                                  runtime_s=runtime,
                                  repeats=_int_field(values['repeats'], 'repeats', path, line),
                                  statistic=values['statistic'].strip())
        except ParseError:
            raise
        except (ValueError, ShapeError) as e:
            raise ParseError(str(e), path=str(path), line=line)
        if record.key in dataset:
            duplicates += 1
            continue
        dataset.add(record)

    if duplicates:
        console.warning(f"{path}: skipped {duplicates} repeated (shape, n_threads) row(s)")
    if 'max_threads' not in meta and dataset.records:
        dataset.max_threads = max(dataset.thread_counts())
    return dataset


def read_shapes(path: Path) -> List[GemmShape]:
    """Read an m,k,n CSV (header optional)."""
    path = Path(path)
    if not path.exists():
        raise ParseError("shape file not found", path=str(path))
    shapes = []
    for line_number, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        fields = [f.strip() for f in line.split(',')]
        if line_number == 1 and fields[:3] == SHAPE_COLUMNS:
            continue
        if len(fields) < 3:
            raise ParseError(f"expected m,k,n but got {line!r}", path=str(path), line=line_number)
        try:
            shapes.append(GemmShape(*(_int_field(v, name, path, line_number)
                                      for v, name in zip(fields[:3], SHAPE_COLUMNS))))
        except ShapeError as e:
            raise ParseError(str(e), path=str(path), line=line_number)
    return shapes


def write_shapes(shapes: Iterable[GemmShape], path: Optional[Path] = None,
                 stream: Optional[TextIO] = None) -> None:
    """Write shapes as m,k,n CSV to a file, or to a stream (stdout by default)."""
    lines = [",".join(SHAPE_COLUMNS)] + [f"{s.m},{s.k},{s.n}" for s in shapes]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        (stream or sys.stdout).write(text)
