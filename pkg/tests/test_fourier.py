"""
Tests for the deterministic Fourier base embedding.
"""

import math

import numpy as np
import pytest

from embedding.fourier import (
    EmbeddingConfig, adjacent_delta, base_table, embed_batch_fused, embed_naive, fourier_expand,
    normalize_id,
)
from exceptions import ConfigError, TokenIdError


def _direct(p, V, d):
    """Component formula evaluated one entry at a time."""
    x = 2.0 * p / (V - 1) - 1.0
    return np.array([
        math.sin((i // 2 + 1) * math.pi * x) if i % 2 == 0 else math.cos((i // 2 + 1) * math.pi * x)
        for i in range(d)
    ])


class TestEmbeddingConfig:

    @pytest.mark.parametrize("V, d", [(1, 4), (10, 3), (10, 0), (10, -2)])
    def test_invalid(self, V, d):
        with pytest.raises(ConfigError):
            EmbeddingConfig(V, d)

    def test_table_bytes(self):
        assert EmbeddingConfig(30522, 256).table_bytes == 31_254_528


class TestNormalizeId:

    def test_endpoints(self):
        assert normalize_id(0, 30522) == -1.0
        assert normalize_id(30521, 30522) == 1.0

    def test_odd_vocab_midpoint(self):
        assert normalize_id(15260, 30521) == 0.0

    def test_strictly_increasing(self):
        values = [normalize_id(p, 30522) for p in range(0, 30522, 7)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_out_of_range_names_id_and_vocab(self):
        with pytest.raises(TokenIdError) as info:
            normalize_id(10, 10)
        assert info.value.token_id == 10
        assert info.value.vocab_size == 10


class TestFourierExpand:

    def test_origin(self):
        np.testing.assert_allclose(fourier_expand(0.0, 4), [0, 1, 0, 1], atol=1e-7)

    def test_upper_endpoint(self):
        np.testing.assert_allclose(fourier_expand(1.0, 4), [0, -1, 0, 1], atol=1e-6)

    def test_half(self):
        np.testing.assert_allclose(fourier_expand(0.5, 4), [1, 0, 0, -1], atol=1e-6)

    @pytest.mark.parametrize("d", [0, 3])
    def test_bad_dimension(self, d):
        with pytest.raises(ConfigError):
            fourier_expand(0.1, d)

    def test_norm_identity(self, rng):
        for _ in range(200):
            V = int(rng.integers(2, 50000))
            d = 2 * int(rng.integers(1, 33))
            p = int(rng.integers(0, V))
            T = fourier_expand(normalize_id(p, V), d).astype(np.float64)
            assert np.dot(T, T) == pytest.approx(d / 2, abs=1e-5)
            assert np.all(np.abs(T) <= 1.0)


class TestFusedEmbedding:

    def test_endpoint_example(self):
        out = embed_batch_fused(np.array([[0]]), EmbeddingConfig(2, 2))
        np.testing.assert_allclose(out.data, [[[0.0, -1.0]]], atol=1e-6)

    def test_output_carries_no_gradient(self):
        out = embed_batch_fused(np.array([[1, 2]]), EmbeddingConfig(8, 4))
        assert out.dtype == np.float32
        assert not out.requires_grad
        assert out.is_leaf

    def test_repeated_id_rows_identical(self):
        out = embed_batch_fused(np.array([[5, 5]]), EmbeddingConfig(30522, 64)).data
        np.testing.assert_array_equal(out[0, 0], out[0, 1])

    def test_matches_direct_formula(self, rng):
        for _ in range(1000):
            V = int(rng.integers(2, 40000))
            d = 2 * int(rng.integers(1, 33))
            p = int(rng.integers(0, V))
            out = embed_batch_fused(np.array([[p]]), EmbeddingConfig(V, d)).data[0, 0]
            np.testing.assert_allclose(out, _direct(p, V, d), atol=1e-6)

    def test_matches_naive(self, rng):
        cfg = EmbeddingConfig(30522, 128)
        ids = rng.integers(0, cfg.vocab_size, size=(8, 32))
        np.testing.assert_allclose(embed_batch_fused(ids, cfg).data, embed_naive(ids, cfg), atol=1e-6)

    def test_out_of_range_reports_position(self):
        with pytest.raises(TokenIdError) as info:
            embed_batch_fused(np.array([[0, 1], [2, 9]]), EmbeddingConfig(9, 4))
        assert info.value.position == (1, 1)

    def test_negative_id(self):
        with pytest.raises(TokenIdError):
            embed_batch_fused(np.array([[-1]]), EmbeddingConfig(9, 4))

    def test_endpoint_alias(self):
        for d in (2, 8, 64):
            table = base_table(EmbeddingConfig(1000, d), [0, 999])
            np.testing.assert_allclose(table[0], table[1], atol=1e-6)


class TestAdjacentDelta:

    def test_values(self):
        assert adjacent_delta(2) == 2.0
        assert adjacent_delta(3) == 1.0
        assert adjacent_delta(30522) == pytest.approx(6.5529e-5, rel=1e-4)

    def test_adjacent_ids_do_not_quantize_together(self):
        cfg = EmbeddingConfig(30522, 256)
        table = base_table(cfg, [30520, 30521])
        assert np.any(table[0] != table[1])

    def test_small_vocab(self):
        with pytest.raises(ConfigError):
            adjacent_delta(1)


class TestOrthogonality:

    def test_gram_matrix_is_identity(self):
        N, d = 100_000, 64
        # ids 0..N-1 of a vocab of N+1 sample x on an even grid over [-1, 1)
        table = base_table(EmbeddingConfig(N + 1, d), np.arange(N)).astype(np.float64)
        gram = (2.0 / N) * table.T @ table
        off_diagonal = gram - np.diag(np.diag(gram))
        assert np.max(np.abs(off_diagonal)) < 5e-3
        np.testing.assert_allclose(np.diag(gram), 1.0, atol=5e-3)
