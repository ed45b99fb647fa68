"""
PETE - Collision Analysis
-------------------------
This module measures how close distinct tokens sit in the Fourier base space.

Adjacent ids differ by only 2/(V-1) in the normalised domain, so the closest
pairs are expected among neighbouring ids. The exact adjacent-pair scan is
cross-checked by random pair sampling, and the endpoint alias between token 0
(x = -1) and token V-1 (x = +1) is reported separately.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

import config
from embedding.fourier import base_table
from exceptions import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class CollisionReport:
    """Distance statistics over base embeddings."""

    vocab_size: int
    d_model: int
    n_tokens: int
    min_pairwise_distance: float
    min_pair: tuple
    mean_nn_distance: float
    histogram_counts: np.ndarray
    histogram_edges: np.ndarray
    adjacent_distances: np.ndarray = field(repr=False)
    sampled_pairs: int = 0
    sampled_min_distance: float = float("nan")
    endpoint_alias_distance: float = float("nan")

    @property
    def alias_detected(self):
        """True when a sampled non-adjacent pair is closer than every adjacent pair.

        The endpoint pair (0, V-1) always aliases and is excluded here.
        """
        c = self.sampled_min_distance
        return bool(np.isfinite(c) and c < self.min_pairwise_distance)

    def to_text(self, width=40):
        """Render a plain-text report with a '#' histogram."""
        lines = [
            f"Collision analysis: V={self.vocab_size}, d={self.d_model}, tokens scanned={self.n_tokens}",
            f"  min adjacent distance: {self.min_pairwise_distance:.6g} (ids {self.min_pair[0]}, {self.min_pair[1]})",
            f"  mean nearest-neighbour distance: {self.mean_nn_distance:.6g}",
            f"  random pairs sampled: {self.sampled_pairs}, min distance: {self.sampled_min_distance:.6g}",
            f"  endpoint alias |T(0) - T(V-1)|: {self.endpoint_alias_distance:.6g} (x = -1 and x = +1 expand identically)",
        ]
        if self.alias_detected:
            lines.append("  WARNING: a non-adjacent pair is closer than the adjacent minimum")
        lines.append("  nearest-neighbour distance histogram:")
        peak = max(int(self.histogram_counts.max()), 1)
        for count, lo, hi in zip(self.histogram_counts, self.histogram_edges[:-1], self.histogram_edges[1:]):
            bar = "#" * int(round(width * count / peak))
            lines.append(f"  [{lo:10.4g}, {hi:10.4g}) {int(count):8d} {bar}")
        return "\n".join(lines)

    def write_csv(self, path):
        """Write adjacent-pair distances in ascending order.

        Args:
            path: Output CSV path (columns pair_rank, distance)
        """
        ranked = np.sort(self.adjacent_distances)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["pair_rank", "distance"])
            for rank, distance in enumerate(ranked, start=1):
                writer.writerow([rank, f"{distance:.9g}"])
        logger.info(f"Wrote {len(ranked)} pair distances to {path}")


def _row_distances(table, left, right):
    diff = table[left].astype(np.float64) - table[right].astype(np.float64)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _random_pair_min(table, ids, vocab_size, n_pairs, rng, chunk):
    n = table.shape[0]
    best = np.inf
    remaining = n_pairs
    while remaining > 0:
        size = min(chunk, remaining)
        left = rng.integers(0, n, size)
        # offset in [1, n-1] keeps both ends distinct
        right = (left + rng.integers(1, n, size)) % n
        distances = _row_distances(table, left, right)
        # x = -1 and x = +1 coincide, so ids live on a circle of V-1 steps;
        # pairs at most one step apart there are the adjacent scan or the endpoint alias
        gap = np.abs(ids[left] - ids[right])
        distances[np.minimum(gap, vocab_size - 1 - gap) <= 1] = np.inf
        best = min(best, float(distances.min()))
        remaining -= size
    return best


def collision_stats(cfg, sample=None, random_pairs=None, seed=0, bins=None):
    """Nearest-neighbour statistics of the Fourier base embeddings.

    Args:
        cfg: EmbeddingConfig
        sample: Optional number of ids to scan (drawn without replacement)
        random_pairs: Random pairs for the cross-check (config default)
        seed: Seed for id and pair sampling
        bins: Histogram bin count

    Returns:
        CollisionReport
    """
    V = cfg.vocab_size
    if sample is not None:
        if sample < 2:
            raise ConfigError(f"collision sample must be >= 2, got {sample}")
        if sample > V:
            raise ConfigError(f"collision sample {sample} exceeds vocab size {V}")
    if random_pairs is None:
        random_pairs = config.COLLISION_RANDOM_PAIRS
    bins = bins or config.COLLISION_HIST_BINS
    rng = np.random.default_rng(seed)

    if sample is None or sample == V:
        ids = np.arange(V, dtype=np.int64)
    else:
        ids = np.sort(rng.choice(V, size=sample, replace=False)).astype(np.int64)
    logger.info(f"Scanning {len(ids)} base embeddings (V={V}, d={cfg.d_model})")

    table = base_table(cfg, ids)
    idx = np.arange(len(ids))
    adjacent = _row_distances(table, idx[:-1], idx[1:])

    # nearest neighbour along the id axis: the closer of the two sides
    left = np.concatenate([[np.inf], adjacent])
    right = np.concatenate([adjacent, [np.inf]])
    nn = np.minimum(left, right)

    best = int(np.argmin(adjacent))
    counts, edges = np.histogram(nn, bins=bins)

    sampled_min = float("nan")
    if random_pairs > 0:
        sampled_min = _random_pair_min(table, ids, V, random_pairs, rng, config.COLLISION_CHUNK)

    endpoints = base_table(cfg, [0, V - 1])
    alias = float(_row_distances(endpoints, [0], [1])[0])

    report = CollisionReport(
        vocab_size=V,
        d_model=cfg.d_model,
        n_tokens=len(ids),
        min_pairwise_distance=float(adjacent[best]),
        min_pair=(int(ids[best]), int(ids[best + 1])),
        mean_nn_distance=float(nn.mean()),
        histogram_counts=counts,
        histogram_edges=edges,
        adjacent_distances=adjacent,
        sampled_pairs=int(random_pairs),
        sampled_min_distance=sampled_min,
        endpoint_alias_distance=alias,
    )
    if report.alias_detected:
        logger.warning(
            f"Non-adjacent collision: sampled min {sampled_min:.3g}, "
            f"adjacent min {report.min_pairwise_distance:.3g}"
        )
    return report
