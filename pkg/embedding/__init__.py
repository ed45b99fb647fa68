"""
PETE - Embedding Package
"""

from embedding.fourier import (
    EmbeddingConfig, normalize_id, fourier_expand, embed_batch_fused, embed_naive,
    adjacent_delta, base_table,
)
from embedding.collisions import CollisionReport, collision_stats
