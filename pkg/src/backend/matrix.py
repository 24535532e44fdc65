"""
GEMM operand types: shapes, aligned matrices, call parameters
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from src.errors import ParameterError, ResourceError, ShapeError

PRECISION_BYTES = {'single': 4, 'double': 8}
DEFAULT_ALIGNMENT = 64
MACHINE_WORD = np.dtype(np.intp).itemsize
SUPPORTED_TRANSPOSE = ('N', 'n')


@dataclass(frozen=True, order=True)
class GemmShape:
    """Dimensions of C(m x n) <- alpha * A(m x k) @ B(k x n) + beta * C."""

    m: int
    k: int
    n: int

    def __post_init__(self):
        for name in ('m', 'k', 'n'):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ShapeError(f"GEMM dimension {name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    def as_tuple(self):
        return (self.m, self.k, self.n)

    @property
    def flops(self) -> int:
        return 2 * self.m * self.k * self.n

    def __str__(self) -> str:
        return f"{self.m}x{self.k}x{self.n}"


@dataclass
class Matrix:
    """Row-major float32 matrix whose buffer starts on an `alignment`-byte boundary."""

    data: np.ndarray
    alignment: int = DEFAULT_ALIGNMENT

    @property
    def address(self) -> int:
        return self.data.ctypes.data

    def is_aligned(self) -> bool:
        return self.address % self.alignment == 0


@dataclass(frozen=True)
class GemmParams:
    """Scalars, transpose flags and thread count of one GEMM call."""

    alpha: float = 1.0
    beta: float = 0.0
    n_threads: int = 1
    transa: str = 'N'
    transb: str = 'N'

    def __post_init__(self):
        object.__setattr__(self, 'alpha', float(np.float32(self.alpha)))
        object.__setattr__(self, 'beta', float(np.float32(self.beta)))
        if isinstance(self.n_threads, bool) or int(self.n_threads) != self.n_threads:
            raise ParameterError(f"n_threads must be an integer, got {self.n_threads!r}")
        object.__setattr__(self, 'n_threads', int(self.n_threads))
        if self.transa not in SUPPORTED_TRANSPOSE or self.transb not in SUPPORTED_TRANSPOSE:
            raise ParameterError(
                f"Only the no-transpose path is implemented (transa={self.transa!r}, transb={self.transb!r})"
            )


MatrixLike = Union[Matrix, np.ndarray]


def memory_footprint(shape: GemmShape, precision: str = 'single') -> int:
    """Bytes held by A, B and C: word_size * (mk + kn + mn)."""
    if precision not in PRECISION_BYTES:
        raise ParameterError(f"precision must be 'single' or 'double', got {precision!r}")
    m, k, n = shape.as_tuple()
    return PRECISION_BYTES[precision] * (m * k + k * n + m * n)


def _check_alignment(alignment: int) -> int:
    if isinstance(alignment, bool) or int(alignment) != alignment:
        raise ParameterError(f"alignment must be an integer, got {alignment!r}")
    alignment = int(alignment)
    if alignment < MACHINE_WORD or alignment & (alignment - 1):
        raise ParameterError(
            f"alignment must be a power of two no smaller than the machine word ({MACHINE_WORD}), got {alignment}"
        )
    return alignment


def alloc_aligned_matrix(rows: int, cols: int, alignment: int = DEFAULT_ALIGNMENT,
                         fill: str = 'zeros', seed: int = 0) -> Matrix:
    """
    Allocate a row-major float32 matrix on an aligned boundary.

    Args:
        rows: Number of rows (>= 1)
        cols: Number of columns (>= 1)
        alignment: Base address alignment in bytes (power of two)
        fill: 'zeros' or 'uniform' (uniform [0, 1) from a seeded generator)
        seed: Seed for the uniform fill

    Returns:
        Matrix whose data view starts on the requested boundary
    """
    if rows < 1 or cols < 1:
        raise ShapeError(f"Matrix dimensions must be positive, got {rows}x{cols}")
    alignment = _check_alignment(alignment)
    if fill not in ('zeros', 'uniform'):
        raise ParameterError(f"fill must be 'zeros' or 'uniform', got {fill!r}")

    nbytes = rows * cols * np.dtype(np.float32).itemsize
    try:
        raw = np.zeros(nbytes + alignment, dtype=np.uint8)
    except MemoryError as e:
        raise ResourceError(f"Could not allocate {nbytes} bytes for a {rows}x{cols} matrix: {e}")

    offset = (-raw.ctypes.data) % alignment
    data = raw[offset:offset + nbytes].view(np.float32).reshape(rows, cols)
    if fill == 'uniform':
        rng = np.random.default_rng(seed)
        data[...] = rng.random((rows, cols), dtype=np.float32)
    return Matrix(data=data, alignment=alignment)


def as_array(operand: MatrixLike) -> np.ndarray:
    """The 2-D float32 array behind an operand."""
    return operand.data if isinstance(operand, Matrix) else operand


def validate_operands(shape: GemmShape, A: MatrixLike, B: MatrixLike, C: MatrixLike):
    """Check operand shapes, dtype and layout; return the underlying arrays."""
    a, b, c = as_array(A), as_array(B), as_array(C)
    expected = {'A': (shape.m, shape.k), 'B': (shape.k, shape.n), 'C': (shape.m, shape.n)}
    for name, array in (('A', a), ('B', b), ('C', c)):
        if not isinstance(array, np.ndarray) or array.ndim != 2:
            raise ShapeError(f"Operand {name} must be a 2-D array")
        if array.shape != expected[name]:
            raise ShapeError(
                f"Operand {name} is {array.shape[0]}x{array.shape[1]}, expected "
                f"{expected[name][0]}x{expected[name][1]} for shape {shape}"
            )
        if array.dtype != np.float32:
            raise ParameterError(f"Operand {name} must be float32, got {array.dtype}")
    if not c.flags.c_contiguous or not c.flags.writeable:
        raise ParameterError("Operand C must be a writeable C-contiguous array")
    return a, b, c


def validate_threads(n_threads: int, max_threads: int) -> int:
    if n_threads < 1 or n_threads > max_threads:
        raise ParameterError(f"n_threads must be in [1, {max_threads}], got {n_threads}")
    return n_threads
