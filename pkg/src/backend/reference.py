"""
Single-threaded triple-loop GEMM used as the correctness oracle.
"""

import numpy as np
from numba import njit

from src.utils.host import logical_cores
from .matrix import GemmParams, GemmShape, MatrixLike, validate_operands, validate_threads


@njit(cache=True)
def _naive_kernel(a, b, c, alpha, beta):
    m, k = a.shape
    n = b.shape[1]
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for l in range(k):
                acc += np.float64(a[i, l]) * np.float64(b[l, j])
            if beta == 0.0:
                c[i, j] = np.float32(alpha * acc)
            else:
                c[i, j] = np.float32(alpha * acc + beta * np.float64(c[i, j]))


def naive_gemm(shape: GemmShape, params: GemmParams,
               A: MatrixLike, B: MatrixLike, C: MatrixLike) -> None:
    """C <- alpha * A @ B + beta * C on the calling thread, float64 accumulator."""
    a, b, c = validate_operands(shape, A, B, C)
    validate_threads(params.n_threads, logical_cores())
    _naive_kernel(a, b, c, np.float64(params.alpha), np.float64(params.beta))
