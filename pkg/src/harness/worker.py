#!/usr/bin/env python3
"""
Gathering worker

Times a list of shapes at one thread count inside a single process and
appends each record to the dataset file as soon as it is measured. Launched
by gather_dataset, one process per thread count.
"""

import argparse
import sys
from pathlib import Path

# Add project root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.backend.backend_manager import create_backend
from src.bundle.dataset_io import append_record, read_shapes
from src.errors import AdsalaError, exit_code_for
from src.harness.timing import time_gemm
from src.utils import console


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description='Time GEMM shapes at one thread count')
    parser.add_argument('--shapes', type=Path, required=True, help='m,k,n CSV of shapes to time')
    parser.add_argument('--threads', type=int, required=True, help='Thread count for every call')
    parser.add_argument('--out', type=Path, required=True, help='Dataset CSV to append to')
    parser.add_argument('--repeats', type=int, default=10)
    parser.add_argument('--warmup', type=int, default=1)
    parser.add_argument('--statistic', default='median', choices=['median', 'mean'])
    parser.add_argument('--affinity', default='cores', choices=['cores', 'threads', 'none'])
    parser.add_argument('--block-mc', type=int, default=128)
    parser.add_argument('--block-kc', type=int, default=256)
    parser.add_argument('--block-nc', type=int, default=512)
    parser.add_argument('--alignment', type=int, default=64)
    parser.add_argument('--seed', type=int, default=0)
    args = parser.parse_args(argv)

    console.set_quiet(True)
    backend = create_backend({'type': 'native', 'affinity': args.affinity,
                              'block_mc': args.block_mc, 'block_kc': args.block_kc,
                              'block_nc': args.block_nc})
    try:
        backend.set_threads(args.threads)
        for shape in read_shapes(args.shapes):
            record = time_gemm(shape, args.threads, backend, repeats=args.repeats,
                               warmup=args.warmup, statistic=args.statistic,
                               alignment=args.alignment, seed=args.seed)
            append_record(args.out, record)
    except AdsalaError as e:
        console.error(str(e))
        return exit_code_for(e)
    finally:
        backend.close()
    return 0


if __name__ == '__main__':
    sys.exit(main())
