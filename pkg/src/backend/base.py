"""
Base GEMM backend class/interface
"""

from abc import ABC, abstractmethod

from .matrix import GemmParams, GemmShape, MatrixLike


class GemmBackend(ABC):
    """Base class for GEMM implementations whose thread count is explicit."""

    name = 'base'

    def __init__(self, max_threads: int):
        """
        Initialize backend.

        Args:
            max_threads: Upper bound on n_threads (host logical cores)
        """
        self.max_threads = max_threads

    @abstractmethod
    def gemm(self, shape: GemmShape, params: GemmParams,
             A: MatrixLike, B: MatrixLike, C: MatrixLike) -> None:
        """
        Compute C <- alpha * A @ B + beta * C in place.

        Args:
            shape: GEMM dimensions
            params: alpha, beta and n_threads
            A: m x k operand
            B: k x n operand
            C: m x n operand, updated in place
        """
        pass

    @abstractmethod
    def set_threads(self, n_threads: int) -> None:
        """Size the worker pool for subsequent calls."""
        pass

    def close(self) -> None:
        """Release worker threads."""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False
