"""
Quasi-random and designed GEMM shape sampling
"""

from .halton import (SamplerConfig, radical_inverse, scrambled_halton, sample_shapes,
                     grid_shapes, digit_permutations, map_unit_to_dims, default_dim_max)

__all__ = ['SamplerConfig', 'radical_inverse', 'scrambled_halton', 'sample_shapes',
           'grid_shapes', 'digit_permutations', 'map_unit_to_dims', 'default_dim_max']
