"""
Native cache-blocked multi-threaded SGEMM

C is cut into n_threads disjoint tiles (row panels, or a 2-D grid when m is
smaller than the thread count). Each worker walks its tile with NC/KC/MC
blocking and multiplies blocks with single-threaded BLAS.
"""

import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from src.errors import ParameterError
from src.utils import console
from src.utils.host import logical_cores
from .affinity import AffinityDescriptor, pin_current_thread, set_affinity_policy
from .base import GemmBackend
from .matrix import GemmParams, GemmShape, MatrixLike, validate_operands, validate_threads

DEFAULT_BLOCKS = (128, 256, 512)

Tile = Tuple[int, int, int, int]


def _bounds(length: int, parts: int) -> List[int]:
    return [i * length // parts for i in range(parts + 1)]


def partition_tiles(m: int, n: int, n_threads: int) -> List[Tile]:
    """
    Split the m x n output into at most n_threads disjoint tiles.

    Row panels are preferred; when m < n_threads the columns are split too.
    Exactly n_threads tiles are produced whenever m * n >= n_threads and the
    thread count factors into (rows <= m) x (cols <= n).
    """
    row_parts, col_parts = min(n_threads, m), 1
    for rows in range(min(n_threads, m), 0, -1):
        if n_threads % rows == 0 and n_threads // rows <= n:
            row_parts, col_parts = rows, n_threads // rows
            break
    else:
        col_parts = max(1, min(n, n_threads // row_parts))

    row_bounds = _bounds(m, row_parts)
    col_bounds = _bounds(n, col_parts)
    tiles = []
    for r in range(row_parts):
        for c in range(col_parts):
            tiles.append((row_bounds[r], row_bounds[r + 1], col_bounds[c], col_bounds[c + 1]))
    return tiles


class NativeBackend(GemmBackend):
    """Blocked SGEMM on a persistent, optionally pinned, worker pool."""

    name = 'native'

    def __init__(self, block_mc: int = 128, block_kc: int = 256, block_nc: int = 512,
                 affinity: str = 'none', max_threads: Optional[int] = None):
        super().__init__(max_threads or logical_cores())
        for label, value in (('MC', block_mc), ('KC', block_kc), ('NC', block_nc)):
            if value < 1:
                raise ParameterError(f"Block size {label} must be positive, got {value}")
        self.block_mc = int(block_mc)
        self.block_kc = int(block_kc)
        self.block_nc = int(block_nc)
        self.affinity_policy = affinity
        self.affinity: Optional[AffinityDescriptor] = None
        self.n_threads = 0
        self.pools_created = 0
        self._pool: Optional[ThreadPoolExecutor] = None
        self._blas_limits = None
        self._worker_ids = itertools.count()
        self._id_lock = threading.Lock()
        self._dispatch_lock = threading.Lock()

    # Pool management

    def _init_worker(self) -> None:
        with self._id_lock:
            index = next(self._worker_ids)
        mask = self.affinity.mask_for_worker(index) if self.affinity else None
        if mask:
            pin_current_thread(mask)

    def set_threads(self, n_threads: int) -> None:
        """Create the pool, recreating it if the thread count changed."""
        validate_threads(n_threads, self.max_threads)
        if self._pool is not None and n_threads == self.n_threads:
            return
        self._shutdown_pool()
        self.affinity = set_affinity_policy(self.affinity_policy, n_threads)
        self._worker_ids = itertools.count()
        if self._blas_limits is None:
            self._blas_limits = threadpool_limits(limits=1, user_api='blas')
        self._pool = ThreadPoolExecutor(max_workers=n_threads,
                                        thread_name_prefix='adsala-gemm',
                                        initializer=self._init_worker)
        self.n_threads = n_threads
        self.pools_created += 1
        if self.pools_created > 1:
            console.info(f"Recreated GEMM worker pool with {n_threads} thread(s)")

    def _shutdown_pool(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None
            self.n_threads = 0

    def close(self) -> None:
        with self._dispatch_lock:
            self._shutdown_pool()
            if self._blas_limits is not None:
                self._blas_limits.restore_original_limits()
                self._blas_limits = None

    # Kernel

    def _run_tile(self, tile: Tile, a: np.ndarray, b: np.ndarray, c: np.ndarray,
                  alpha: np.float32, beta: np.float32) -> None:
        i0, i1, j0, j1 = tile
        if beta == 0:
            c[i0:i1, j0:j1] = 0
        elif beta != 1:
            c[i0:i1, j0:j1] *= beta
        if alpha == 0:
            return

        k = a.shape[1]
        mc, kc, nc = self.block_mc, self.block_kc, self.block_nc
        for jc in range(j0, j1, nc):
            jend = min(jc + nc, j1)
            for pc in range(0, k, kc):
                pend = min(pc + kc, k)
                b_panel = b[pc:pend, jc:jend]
                for ic in range(i0, i1, mc):
                    iend = min(ic + mc, i1)
                    block = np.matmul(a[ic:iend, pc:pend], b_panel)
                    if alpha != 1:
                        block *= alpha
                    c[ic:iend, jc:jend] += block

    def gemm(self, shape: GemmShape, params: GemmParams,
             A: MatrixLike, B: MatrixLike, C: MatrixLike) -> None:
        a, b, c = validate_operands(shape, A, B, C)
        validate_threads(params.n_threads, self.max_threads)
        alpha = np.float32(params.alpha)
        beta = np.float32(params.beta)

        with self._dispatch_lock:
            self.set_threads(params.n_threads)
            tiles = partition_tiles(shape.m, shape.n, params.n_threads)
            futures = [self._pool.submit(self._run_tile, tile, a, b, c, alpha, beta)
                       for tile in tiles]
            for future in futures:
                future.result()
