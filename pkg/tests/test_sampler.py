"""
Tests for scrambled Halton shape sampling
"""

import numpy as np
import pytest

from src.backend.matrix import GemmShape, memory_footprint
from src.errors import ExhaustionError, ParameterError
from src.sample.halton import (MIB, SamplerConfig, default_dim_max, digit_permutations, grid_shapes,
                               map_unit_to_dims, radical_inverse, sample_shapes, scrambled_halton)


class TestRadicalInverse:
    @pytest.mark.parametrize('index,base,expected', [(0, 2, 0.0), (1, 2, 0.5), (2, 2, 0.25), (3, 2, 0.75),
                                                     (1, 3, 1 / 3), (5, 3, 7 / 9), (3, 4, 0.75)])
    def test_known_values(self, index, base, expected):
        assert radical_inverse(index, base) == pytest.approx(expected, abs=1e-15)

    def test_bad_base(self):
        with pytest.raises(ParameterError):
            radical_inverse(3, 1)

    def test_identity_permutation_is_plain_halton(self):
        config = SamplerConfig()
        identity = [np.arange(b) for b in config.bases]
        points = scrambled_halton(20, config, permutations=identity)
        expected = [[radical_inverse(i, b) for b in config.bases] for i in range(1, 21)]
        np.testing.assert_allclose(points, expected, atol=1e-12)


class TestScrambledHalton:
    def test_deterministic_for_a_seed(self):
        config = SamplerConfig(scramble_seed=11)
        np.testing.assert_array_equal(scrambled_halton(100, config), scrambled_halton(100, config))

    def test_seed_changes_points(self):
        first = scrambled_halton(100, SamplerConfig(scramble_seed=1))
        second = scrambled_halton(100, SamplerConfig(scramble_seed=2))
        assert not np.array_equal(first, second)

    def test_points_in_unit_cube(self):
        points = scrambled_halton(2000, SamplerConfig())
        assert points.shape == (2000, 3)
        assert (points >= 0).all() and (points < 1).all()

    def test_base_two_dyadic_intervals(self):
        """The first 2^j points put exactly one base-2 coordinate in each interval of width 2^-j."""
        config = SamplerConfig(scramble_seed=99)
        for j in range(1, 11):
            count = 2 ** j
            column = scrambled_halton(count, config)[:, 0]
            occupancy = np.bincount(np.floor(column * count).astype(int), minlength=count)
            assert (occupancy == 1).all(), f"j={j}"

    def test_permutations_are_permutations(self):
        for base, perm in zip((2, 3, 5), digit_permutations((2, 3, 5), seed=4)):
            assert sorted(perm.tolist()) == list(range(base))


class TestShapeSampling:
    def test_default_dim_max(self):
        assert default_dim_max(500 * MIB) == 6609
        assert 4 * 3 * 6609 ** 2 <= 500 * MIB < 4 * 3 * 6610 ** 2

    def test_dataset_sized_draw(self):
        config = SamplerConfig(mem_cap_bytes=500 * MIB)
        shapes = sample_shapes(1763, config)
        assert len(shapes) == 1763
        assert len(set(shapes)) == 1763
        for shape in shapes:
            assert memory_footprint(shape) <= 500 * MIB
            assert min(shape.as_tuple()) >= config.dim_min
            assert max(shape.as_tuple()) <= config.dim_max

    def test_explicit_dim_max_rejects_over_cap(self):
        config = SamplerConfig(mem_cap_bytes=10 * MIB, dim_max=4000)
        shapes = sample_shapes(100, config)
        assert all(memory_footprint(s) <= 10 * MIB for s in shapes)

    def test_square_mapping_bounds(self):
        config = SamplerConfig(dim_min=16, dim_max=1000)
        dims = map_unit_to_dims(np.array([[0.0, 0.5, np.nextafter(1.0, 0.0)]]), config)
        assert dims[0, 0] == 16
        assert dims[0, 2] == 1000
        assert dims[0, 1] == round(((4 + np.sqrt(1000)) / 2) ** 2)

    def test_exhaustion(self):
        config = SamplerConfig(dim_min=16, dim_max=17, mem_cap_bytes=1 * MIB)
        with pytest.raises(ExhaustionError):
            sample_shapes(20, config)

    def test_cap_too_small_for_dim_min(self):
        with pytest.raises(ParameterError):
            SamplerConfig(dim_min=16, dim_max=32, mem_cap_bytes=100)

    def test_from_config_overrides(self):
        config = SamplerConfig.from_config({'mem_cap_mb': 100, 'bases': [2, 3, 5]}, scramble_seed=5)
        assert config.mem_cap_bytes == 100 * MIB
        assert config.bases == (2, 3, 5)
        assert config.scramble_seed == 5


class TestGridShapes:
    def test_cap_filters_grid(self):
        config = SamplerConfig(mem_cap_bytes=1 * MIB)
        shapes = grid_shapes([64, 256, 1024], config)
        assert GemmShape(64, 64, 64) in shapes
        assert GemmShape(1024, 1024, 1024) not in shapes
        assert all(memory_footprint(s) <= 1 * MIB for s in shapes)

    def test_full_grid_when_cap_is_large(self):
        shapes = grid_shapes([64, 2048, 4096], SamplerConfig())
        assert len(shapes) == 27
        assert GemmShape(64, 2048, 64) in shapes
