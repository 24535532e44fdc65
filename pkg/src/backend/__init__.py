"""
GEMM backends, operand types and affinity control
"""

from .matrix import (GemmShape, GemmParams, Matrix, memory_footprint, alloc_aligned_matrix,
                     PRECISION_BYTES)
from .base import GemmBackend
from .native import NativeBackend, partition_tiles
from .reference import naive_gemm
from .affinity import AffinityDescriptor, set_affinity_policy
from .backend_manager import create_backend

__all__ = [
    'GemmShape', 'GemmParams', 'Matrix', 'memory_footprint', 'alloc_aligned_matrix',
    'PRECISION_BYTES', 'GemmBackend', 'NativeBackend', 'partition_tiles', 'naive_gemm',
    'AffinityDescriptor', 'set_affinity_policy', 'create_backend',
]
