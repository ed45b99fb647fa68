"""
Tests for the collision analysis of Fourier base embeddings.
"""

import csv

import numpy as np
import pytest

from embedding.collisions import collision_stats
from embedding.fourier import EmbeddingConfig, base_table
from exceptions import ConfigError


class TestCollisionStats:

    def test_two_tokens_collide(self):
        report = collision_stats(EmbeddingConfig(2, 2), random_pairs=10)
        assert report.min_pairwise_distance == pytest.approx(0.0, abs=1e-6)
        assert report.min_pair == (0, 1)

    def test_three_tokens(self):
        report = collision_stats(EmbeddingConfig(3, 2), random_pairs=100)
        assert report.min_pairwise_distance == pytest.approx(2.0, abs=1e-6)
        # tokens 0 and 2 sit at x = -1 and x = +1
        assert report.endpoint_alias_distance == pytest.approx(0.0, abs=1e-6)
        assert not report.alias_detected

    @pytest.mark.parametrize("d_model", [2, 64, 256])
    def test_endpoint_alias_is_not_a_warning(self, d_model):
        report = collision_stats(EmbeddingConfig(30522, d_model), sample=2000, seed=0)
        assert report.endpoint_alias_distance == pytest.approx(0.0, abs=1e-5)
        assert not report.alias_detected
        text = report.to_text()
        assert "endpoint alias" in text
        assert "WARNING" not in text

    def test_sampled_pairs_skip_wrap_neighbours(self):
        report = collision_stats(EmbeddingConfig(50, 2), random_pairs=5000, seed=2)
        # on the circle of 49 steps the closest non-neighbour pair is two steps apart
        expected = report.min_pairwise_distance * 2 * np.cos(np.pi / 49)
        assert report.sampled_min_distance == pytest.approx(expected, rel=1e-4)

    def test_ordering(self):
        for V, d in [(50, 4), (1000, 16), (5000, 64)]:
            report = collision_stats(EmbeddingConfig(V, d), random_pairs=1000)
            assert 0.0 <= report.min_pairwise_distance <= report.mean_nn_distance

    def test_adjacent_minimum_matches_brute_force(self):
        cfg = EmbeddingConfig(200, 8)
        table = base_table(cfg).astype(np.float64)
        distances = np.linalg.norm(table[:, None, :] - table[None, :, :], axis=-1)
        # the endpoint pair aliases, so compare against all pairs except (0, V-1)
        distances[0, -1] = distances[-1, 0] = np.inf
        np.fill_diagonal(distances, np.inf)
        report = collision_stats(cfg, random_pairs=0)
        assert report.min_pairwise_distance == pytest.approx(distances.min(), rel=1e-6)

    def test_histogram_covers_every_token(self):
        report = collision_stats(EmbeddingConfig(500, 16), random_pairs=100, bins=7)
        assert len(report.histogram_counts) == 7
        assert report.histogram_counts.sum() == 500

    def test_sample(self):
        report = collision_stats(EmbeddingConfig(30522, 64), sample=1000, random_pairs=1000, seed=3)
        assert report.n_tokens == 1000
        assert report.min_pair[0] < report.min_pair[1]

    @pytest.mark.parametrize("sample", [1, 11])
    def test_bad_sample(self, sample):
        with pytest.raises(ConfigError):
            collision_stats(EmbeddingConfig(10, 4), sample=sample)

    def test_sampling_is_seeded(self):
        cfg = EmbeddingConfig(5000, 16)
        first = collision_stats(cfg, sample=100, random_pairs=500, seed=1)
        second = collision_stats(cfg, sample=100, random_pairs=500, seed=1)
        assert first.min_pairwise_distance == second.min_pairwise_distance
        assert first.sampled_min_distance == second.sampled_min_distance


class TestCollisionReport:

    def test_text_report(self):
        text = collision_stats(EmbeddingConfig(100, 8), random_pairs=100).to_text()
        assert "min adjacent distance" in text
        assert "#" in text

    def test_csv_sorted_ascending(self, tmp_path):
        report = collision_stats(EmbeddingConfig(100, 8), random_pairs=0)
        path = tmp_path / "pairs.csv"
        report.write_csv(path)
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["pair_rank", "distance"]
        distances = [float(row[1]) for row in rows[1:]]
        assert len(distances) == 99
        assert distances == sorted(distances)
