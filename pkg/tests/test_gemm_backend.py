"""
Tests for the GEMM backend: operands, tiling, the blocked kernel and affinity
"""

import numpy as np
import pytest

from src.backend.affinity import AffinityDescriptor, core_groups, set_affinity_policy
from src.backend.backend_manager import create_backend
from src.backend.matrix import (GemmParams, GemmShape, alloc_aligned_matrix, memory_footprint)
from src.backend.native import NativeBackend, partition_tiles
from src.backend.reference import naive_gemm
from src.errors import ConfigError, ParameterError, ShapeError
from src.utils.host import logical_cores


def _operands(rng, m, k, n):
    a = rng.uniform(-1, 1, (m, k)).astype(np.float32)
    b = rng.uniform(-1, 1, (k, n)).astype(np.float32)
    c = rng.uniform(-1, 1, (m, n)).astype(np.float32)
    return a, b, c


class TestOperands:
    @pytest.mark.parametrize('dims', [(0, 4, 4), (4, -1, 4), (4, 4, 2.5), (True, 4, 4)])
    def test_invalid_shape(self, dims):
        with pytest.raises(ShapeError):
            GemmShape(*dims)

    def test_flops_and_footprint(self):
        shape = GemmShape(2, 3, 4)
        assert shape.flops == 48
        assert memory_footprint(shape) == 4 * (6 + 12 + 8)
        assert memory_footprint(shape, 'double') == 8 * (6 + 12 + 8)

    def test_footprint_grows_with_every_dimension(self):
        rng = np.random.default_rng(5)
        for m, k, n in rng.integers(1, 5000, size=(200, 3)):
            base = GemmShape(int(m), int(k), int(n))
            footprint = memory_footprint(base)
            for grown in (GemmShape(base.m + 1, base.k, base.n), GemmShape(base.m, base.k + 1, base.n),
                          GemmShape(base.m, base.k, base.n + 1)):
                assert memory_footprint(grown) > footprint
                assert memory_footprint(grown, 'double') == 2 * memory_footprint(grown)

    @pytest.mark.parametrize('alignment', [8, 64, 4096])
    def test_aligned_allocation(self, alignment):
        matrix = alloc_aligned_matrix(7, 13, alignment)
        assert matrix.is_aligned()
        assert matrix.data.shape == (7, 13)
        assert matrix.data.dtype == np.float32
        assert not matrix.data.any()

    @pytest.mark.parametrize('alignment', [3, 4, 48])
    def test_bad_alignment(self, alignment):
        with pytest.raises(ParameterError):
            alloc_aligned_matrix(4, 4, alignment)

    def test_uniform_fill_is_seeded(self):
        first = alloc_aligned_matrix(8, 8, fill='uniform', seed=3).data
        second = alloc_aligned_matrix(8, 8, fill='uniform', seed=3).data
        np.testing.assert_array_equal(first, second)
        assert first.min() >= 0 and first.max() < 1

    def test_transpose_unsupported(self):
        with pytest.raises(ParameterError):
            GemmParams(transa='T')


class TestPartitionTiles:
    @pytest.mark.parametrize('m,n,t', [(100, 100, 1), (100, 100, 8), (3, 100, 8), (5, 3, 7),
                                       (1, 1, 4), (2, 64, 16), (17, 1, 4)])
    def test_tiles_cover_output_once(self, m, n, t):
        tiles = partition_tiles(m, n, t)
        assert 1 <= len(tiles) <= t
        covered = np.zeros((m, n), dtype=int)
        for i0, i1, j0, j1 in tiles:
            assert i0 < i1 and j0 < j1
            covered[i0:i1, j0:j1] += 1
        assert (covered == 1).all()

    def test_exact_tile_count_when_factorable(self):
        assert len(partition_tiles(100, 100, 8)) == 8
        assert len(partition_tiles(3, 100, 8)) == 8


class TestNativeGemm:
    def test_matches_naive_oracle(self, native_backend):
        rng = np.random.default_rng(1234)
        max_threads = native_backend.max_threads
        for case in range(60):
            m, k, n = (int(v) for v in rng.integers(1, 129, size=3))
            shape = GemmShape(m, k, n)
            n_threads = int(rng.integers(1, max_threads + 1))
            a, b, c = _operands(rng, m, k, n)
            alpha, beta = float(rng.uniform(-2, 2)), float(rng.choice([0.0, 1.0, 0.5]))
            expected = c.copy()
            naive_gemm(shape, GemmParams(alpha, beta, 1), a, b, expected)
            native_backend.gemm(shape, GemmParams(alpha, beta, n_threads), a, b, c)
            bound = 1e-4 * k * np.abs(a).max() * np.abs(b).max() * max(1.0, abs(alpha)) + 1e-6
            assert np.abs(c - expected).max() <= bound, f"case {case}: {shape} with {n_threads} thread(s)"

    @pytest.mark.parametrize('beta', [-1.5, 0.25, 3.0])
    def test_beta_scales_previous_c(self, native_backend, beta):
        rng = np.random.default_rng(21)
        shape = GemmShape(45, 31, 67)
        a, b, c0 = _operands(rng, 45, 31, 67)
        n_threads = min(2, native_backend.max_threads)

        product = np.zeros_like(c0)
        native_backend.gemm(shape, GemmParams(0.75, 0.0, n_threads), a, b, product)
        c = c0.copy()
        native_backend.gemm(shape, GemmParams(0.75, beta, n_threads), a, b, c)
        oracle = c0.copy()
        naive_gemm(shape, GemmParams(0.75, beta, 1), a, b, oracle)

        tolerance = 1e-4 * 31 + 1e-5 * abs(beta)
        np.testing.assert_allclose(c, product + np.float32(beta) * c0, atol=tolerance)
        np.testing.assert_allclose(c, oracle, atol=tolerance)

    def test_every_thread_count(self, native_backend):
        rng = np.random.default_rng(7)
        shape = GemmShape(37, 53, 29)
        a, b, _ = _operands(rng, 37, 53, 29)
        expected = np.zeros((37, 29), dtype=np.float32)
        naive_gemm(shape, GemmParams(), a, b, expected)
        for n_threads in range(1, native_backend.max_threads + 1):
            c = np.zeros((37, 29), dtype=np.float32)
            native_backend.gemm(shape, GemmParams(n_threads=n_threads), a, b, c)
            np.testing.assert_allclose(c, expected, atol=1e-4 * 53)

    def test_beta_zero_ignores_garbage_in_c(self, native_backend):
        rng = np.random.default_rng(0)
        a, b, _ = _operands(rng, 8, 8, 8)
        c = np.full((8, 8), np.nan, dtype=np.float32)
        native_backend.gemm(GemmShape(8, 8, 8), GemmParams(1.0, 0.0, 2), a, b, c)
        assert np.isfinite(c).all()

    def test_alpha_zero_scales_c(self, native_backend):
        rng = np.random.default_rng(0)
        a, b, c = _operands(rng, 8, 8, 8)
        expected = c * np.float32(0.5)
        native_backend.gemm(GemmShape(8, 8, 8), GemmParams(0.0, 0.5, 1), a, b, c)
        np.testing.assert_allclose(c, expected, rtol=1e-6)

    def test_pool_recreated_only_on_thread_change(self, native_backend):
        rng = np.random.default_rng(0)
        shape = GemmShape(16, 16, 16)
        a, b, c = _operands(rng, 16, 16, 16)
        native_backend.gemm(shape, GemmParams(n_threads=1), a, b, c)
        native_backend.gemm(shape, GemmParams(n_threads=1), a, b, c)
        assert native_backend.pools_created == 1
        if native_backend.max_threads > 1:
            native_backend.gemm(shape, GemmParams(n_threads=2), a, b, c)
            assert native_backend.pools_created == 2

    def test_too_many_threads(self, native_backend):
        shape = GemmShape(4, 4, 4)
        a = np.zeros((4, 4), dtype=np.float32)
        with pytest.raises(ParameterError):
            native_backend.gemm(shape, GemmParams(n_threads=native_backend.max_threads + 1), a, a, a.copy())

    def test_operand_shape_mismatch(self, native_backend):
        a = np.zeros((4, 5), dtype=np.float32)
        with pytest.raises(ShapeError):
            native_backend.gemm(GemmShape(4, 4, 4), GemmParams(), a, a, np.zeros((4, 4), dtype=np.float32))

    def test_double_precision_rejected(self, native_backend):
        a = np.zeros((4, 4))
        with pytest.raises(ParameterError):
            native_backend.gemm(GemmShape(4, 4, 4), GemmParams(), a, a, a.copy())

    def test_aligned_matrix_operands(self, native_backend):
        shape = GemmShape(33, 20, 17)
        A = alloc_aligned_matrix(33, 20, fill='uniform', seed=1)
        B = alloc_aligned_matrix(20, 17, fill='uniform', seed=2)
        C = alloc_aligned_matrix(33, 17)
        native_backend.gemm(shape, GemmParams(n_threads=1), A, B, C)
        np.testing.assert_allclose(C.data, A.data @ B.data, rtol=1e-5, atol=1e-5)

    def test_bad_block_size(self):
        with pytest.raises(ParameterError):
            NativeBackend(block_mc=0)


class TestAffinity:
    def test_none_policy(self):
        descriptor = set_affinity_policy('none')
        assert descriptor.applied == 'none'
        assert descriptor.mask_for_worker(0) is None

    def test_unknown_policy(self):
        with pytest.raises(ParameterError):
            set_affinity_policy('sockets')

    def test_threads_policy_masks(self):
        descriptor = set_affinity_policy('threads', 1)
        if descriptor.applied == 'threads':
            assert all(len(mask) == 1 for mask in descriptor.cpu_sets)
        else:
            assert descriptor.warning

    def test_round_robin_masks(self):
        descriptor = AffinityDescriptor('cores', 'cores', [frozenset([0, 1]), frozenset([2, 3])])
        assert descriptor.mask_for_worker(0) == frozenset([0, 1])
        assert descriptor.mask_for_worker(3) == frozenset([2, 3])

    def test_core_groups_from_topology(self, tmp_path):
        for cpu, core in [(0, 0), (1, 1), (2, 0), (3, 1)]:
            topology = tmp_path / f"cpu{cpu}" / "topology"
            topology.mkdir(parents=True)
            (topology / "core_id").write_text(f"{core}\n")
            (topology / "physical_package_id").write_text("0\n")
        groups, from_topology = core_groups([0, 1, 2, 3], tmp_path)
        assert from_topology
        assert groups == [frozenset([0, 2]), frozenset([1, 3])]

    def test_core_groups_without_topology(self, tmp_path):
        groups, from_topology = core_groups([0, 1], tmp_path)
        assert not from_topology
        assert groups == [frozenset([0]), frozenset([1])]

    def test_pinned_backend_still_correct(self):
        backend = NativeBackend(block_mc=16, block_kc=16, block_nc=16, affinity='cores')
        try:
            rng = np.random.default_rng(5)
            a, b, _ = _operands(rng, 20, 20, 20)
            c = np.zeros((20, 20), dtype=np.float32)
            backend.gemm(GemmShape(20, 20, 20), GemmParams(n_threads=min(2, logical_cores())), a, b, c)
            np.testing.assert_allclose(c, a @ b, rtol=1e-4, atol=1e-4)
            assert backend.affinity.requested == 'cores'
        finally:
            backend.close()


class TestBackendManager:
    def test_unknown_backend(self):
        with pytest.raises(ConfigError):
            create_backend({'type': 'cuda'})

    def test_native_backend_from_config(self):
        backend = create_backend({'type': 'native', 'affinity': 'none', 'block_mc': 8,
                                  'block_kc': 8, 'block_nc': 8})
        try:
            assert isinstance(backend, NativeBackend)
            assert backend.block_mc == 8
        finally:
            backend.close()
