"""
Scrambled Halton sampling of GEMM shapes under a memory cap
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.backend.matrix import GemmShape, PRECISION_BYTES, memory_footprint
from src.errors import ExhaustionError, ParameterError

MIB = 2 ** 20
DEFAULT_BASES = (2, 3, 4)
EXHAUSTION_FACTOR = 10
# Digits per coordinate: enough to address 2**32 indices in every base
INDEX_BITS = 32


def default_dim_max(mem_cap_bytes: int, precision: str = 'single') -> int:
    """Largest d with word_size * 3 * d**2 <= cap (the cube corner is admissible)."""
    return int(math.isqrt(mem_cap_bytes // (3 * PRECISION_BYTES[precision])))


@dataclass
class SamplerConfig:
    """Parameters of the shape sampler."""

    bases: Tuple[int, ...] = DEFAULT_BASES
    scramble_seed: int = 20230501
    dim_min: int = 16
    dim_max: Optional[int] = None
    mem_cap_bytes: int = 500 * MIB
    precision: str = 'single'
    mapping: str = 'square'
    start_index: int = 1

    def __post_init__(self):
        self.bases = tuple(int(b) for b in self.bases)
        if len(self.bases) != 3:
            raise ParameterError(f"Shape sampling needs three bases, got {self.bases}")
        for base in self.bases:
            if base < 2:
                raise ParameterError(f"Halton base must be >= 2, got {base}")
        if self.precision not in PRECISION_BYTES:
            raise ParameterError(f"precision must be 'single' or 'double', got {self.precision!r}")
        if self.mapping not in ('square', 'linear'):
            raise ParameterError(f"mapping must be 'square' or 'linear', got {self.mapping!r}")
        if self.dim_min < 1:
            raise ParameterError(f"dim_min must be positive, got {self.dim_min}")
        if self.dim_max is None:
            self.dim_max = default_dim_max(self.mem_cap_bytes, self.precision)
        if self.dim_min > self.dim_max:
            raise ParameterError(f"dim_min ({self.dim_min}) exceeds dim_max ({self.dim_max})")
        smallest = memory_footprint(GemmShape(self.dim_min, self.dim_min, self.dim_min), self.precision)
        if self.mem_cap_bytes < smallest:
            raise ParameterError(
                f"Memory cap {self.mem_cap_bytes} B cannot hold the smallest shape "
                f"({self.dim_min}^3 needs {smallest} B)"
            )

    @classmethod
    def from_config(cls, sampler_config: dict, **overrides) -> 'SamplerConfig':
        """Build from the 'sampler' section of the YAML configuration."""
        values = {
            'bases': tuple(sampler_config.get('bases', DEFAULT_BASES)),
            'scramble_seed': sampler_config.get('scramble_seed', 20230501),
            'dim_min': sampler_config.get('dim_min', 16),
            'dim_max': sampler_config.get('dim_max'),
            'mem_cap_bytes': int(float(sampler_config.get('mem_cap_mb', 500)) * MIB),
            'precision': sampler_config.get('precision', 'single'),
            'mapping': sampler_config.get('mapping', 'square'),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def radical_inverse(index: int, base: int) -> float:
    """Mirror the base-b digits of index about the radix point."""
    if base < 2:
        raise ParameterError(f"Halton base must be >= 2, got {base}")
    if index < 0:
        raise ParameterError(f"Halton index must be non-negative, got {index}")
    result = 0.0
    scale = 1.0 / base
    while index > 0:
        index, digit = divmod(index, base)
        result += digit * scale
        scale /= base
    return result


def digit_count(base: int) -> int:
    return math.ceil(INDEX_BITS * math.log(2) / math.log(base))


def digit_permutations(bases: Sequence[int], seed: int) -> List[np.ndarray]:
    """One uniformly random permutation of {0..b-1} per base, derived from the seed."""
    rng = np.random.default_rng(seed)
    return [rng.permutation(base) for base in bases]


def scrambled_radical_inverse(indices: np.ndarray, base: int, permutation: np.ndarray) -> np.ndarray:
    """
    Radical inverse with every digit (including leading zeros up to a fixed
    digit count) passed through `permutation`.
    """
    if base < 2:
        raise ParameterError(f"Halton base must be >= 2, got {base}")
    permutation = np.asarray(permutation)
    remaining = np.asarray(indices, dtype=np.int64).copy()
    result = np.zeros(remaining.shape, dtype=np.float64)
    scale = 1.0 / base
    for _ in range(digit_count(base)):
        remaining, digits = np.divmod(remaining, base)
        result += permutation[digits] * scale
        scale /= base
    # Permuted trailing digits can sum to exactly 1.0 in float64
    return np.minimum(result, np.nextafter(1.0, 0.0))


def scrambled_halton(count: int, config: SamplerConfig,
                     permutations: Optional[List[np.ndarray]] = None,
                     start_index: Optional[int] = None) -> np.ndarray:
    """
    Scrambled Halton points in [0, 1)^3.

    Args:
        count: Number of points
        config: Sampler configuration (bases and scramble seed)
        permutations: Explicit per-base digit permutations (identity gives plain Halton)
        start_index: First sequence index (defaults to config.start_index)

    Returns:
        Array of shape (count, 3)
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    if permutations is None:
        permutations = digit_permutations(config.bases, config.scramble_seed)
    start = config.start_index if start_index is None else start_index
    indices = np.arange(start, start + count, dtype=np.int64)
    columns = [scrambled_radical_inverse(indices, base, perm)
               for base, perm in zip(config.bases, permutations)]
    return np.column_stack(columns)


def map_unit_to_dims(points: np.ndarray, config: SamplerConfig) -> np.ndarray:
    """Map unit-cube points to integer dimensions in [dim_min, dim_max]."""
    points = np.asarray(points, dtype=np.float64)
    lo, hi = config.dim_min, config.dim_max
    if config.mapping == 'square':
        root_lo, root_hi = math.sqrt(lo), math.sqrt(hi)
        dims = np.rint((root_lo + points * (root_hi - root_lo)) ** 2)
    else:
        dims = np.rint(lo + points * (hi - lo))
    return np.clip(dims, lo, hi).astype(np.int64)


def sample_shapes(count: int, config: SamplerConfig) -> List[GemmShape]:
    """
    Draw `count` distinct admissible shapes from the scrambled Halton sequence.

    Shapes over the memory cap and repeats are skipped; the sequence continues
    until `count` shapes are emitted or 10 x count points have been drawn.
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    permutations = digit_permutations(config.bases, config.scramble_seed)
    max_draws = EXHAUSTION_FACTOR * count

    shapes: List[GemmShape] = []
    seen = set()
    drawn = 0
    index = config.start_index
    while len(shapes) < count and drawn < max_draws:
        batch = min(max(count - len(shapes), 64), max_draws - drawn)
        points = scrambled_halton(batch, config, permutations, start_index=index)
        index += batch
        drawn += batch
        for m, k, n in map_unit_to_dims(points, config):
            key = (int(m), int(k), int(n))
            if key in seen:
                continue
            shape = GemmShape(*key)
            if memory_footprint(shape, config.precision) > config.mem_cap_bytes:
                continue
            seen.add(key)
            shapes.append(shape)
            if len(shapes) == count:
                break

    if len(shapes) < count:
        raise ExhaustionError(
            f"Only {len(shapes)} distinct admissible shapes after {drawn} draws "
            f"(requested {count}); widen [dim_min, dim_max] or raise the memory cap"
        )
    return shapes


def grid_shapes(values: Iterable[int], config: SamplerConfig) -> List[GemmShape]:
    """Every (m, k, n) over a designed value list that fits under the memory cap."""
    values = sorted({int(v) for v in values})
    if not values or values[0] < 1:
        raise ParameterError("Grid values must be positive integers")
    shapes = []
    for m, k, n in itertools.product(values, repeat=3):
        shape = GemmShape(m, k, n)
        if memory_footprint(shape, config.precision) <= config.mem_cap_bytes:
            shapes.append(shape)
    return shapes
