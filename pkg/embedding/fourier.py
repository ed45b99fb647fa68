"""
PETE - Fourier Embedding
------------------------
This module maps token ids to deterministic Fourier base embeddings.

Token id p is normalised to x = 2p/(V-1) - 1 in [-1, 1] and expanded into d
components: component i holds sin((i//2 + 1)·π·x) for even i and
cos((i//2 + 1)·π·x) for odd i. The fused path does both steps in one pass
over the output without materialising a V×d table.
"""

import math
import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from core.tensor import Tensor
from exceptions import ConfigError, TokenIdError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingConfig:
    """Vocabulary size and model dimension of the base embedding."""

    vocab_size: int
    d_model: int

    def __post_init__(self):
        if int(self.vocab_size) != self.vocab_size or self.vocab_size < 2:
            raise ConfigError(f"vocab_size must be an integer >= 2, got {self.vocab_size}")
        _check_dimension(self.d_model)

    @property
    def table_bytes(self):
        """Size of the equivalent learned float32 table."""
        return self.vocab_size * self.d_model * 4


def _check_dimension(d):
    if int(d) != d or d < 2 or d % 2:
        raise ConfigError(f"d_model must be a positive even integer, got {d}")


def normalize_id(p, vocab_size):
    """Map token id p to [-1, 1].

    Args:
        p: Token id in [0, V-1]
        vocab_size: V >= 2

    Returns:
        x = 2p/(V-1) - 1 as a 64-bit float
    """
    if vocab_size < 2:
        raise ConfigError(f"vocab_size must be >= 2, got {vocab_size}")
    if not 0 <= p <= vocab_size - 1:
        raise TokenIdError(p, vocab_size)
    return 2.0 * p / (vocab_size - 1) - 1.0


def fourier_expand(x, d):
    """Expand a normalised id into d sine/cosine components.

    Args:
        x: Real in [-1, 1]
        d: Even dimension >= 2

    Returns:
        float32 array [d]
    """
    _check_dimension(d)
    freqs = np.arange(d) // 2 + 1
    angles = freqs * (math.pi * float(x))
    out = np.where(np.arange(d) % 2 == 0, np.sin(angles), np.cos(angles))
    return out.astype(np.float32)


def adjacent_delta(vocab_size):
    """Spacing between normalised ids of adjacent tokens, 2/(V-1)."""
    if vocab_size < 2:
        raise ConfigError(f"vocab_size must be >= 2, got {vocab_size}")
    return 2.0 / (vocab_size - 1)


def check_ids(ids, vocab_size):
    """Raise TokenIdError for the first id outside [0, V-1].

    Args:
        ids: Integer array of any shape
        vocab_size: V
    """
    ids = np.asarray(ids)
    bad = np.argwhere((ids < 0) | (ids >= vocab_size))
    if bad.size:
        position = tuple(int(i) for i in bad[0])
        raise TokenIdError(int(ids[position]), vocab_size, position)


@njit(nogil=True)
def _fourier_kernel(ids, vocab_size, d_model, out):
    denom = vocab_size - 1
    half = d_model // 2
    for b in range(ids.shape[0]):
        for s in range(ids.shape[1]):
            x = 2.0 * ids[b, s] / denom - 1.0
            theta = math.pi * x
            for k in range(half):
                angle = (k + 1) * theta
                out[b, s, 2 * k] = math.sin(angle)
                out[b, s, 2 * k + 1] = math.cos(angle)


def fused_array(ids, cfg):
    """Fused normalise-and-expand into a fresh float32 array [B, S, d]."""
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    if ids.ndim != 2:
        raise ConfigError(f"ids must be a [B, S] array, got shape {ids.shape}")
    check_ids(ids, cfg.vocab_size)
    out = np.empty(ids.shape + (cfg.d_model,), dtype=np.float32)
    _fourier_kernel(ids, cfg.vocab_size, cfg.d_model, out)
    return out


def embed_batch_fused(ids, cfg):
    """Base embeddings for a batch of ids.

    Args:
        ids: Integer array [B, S] with values in [0, V-1]
        cfg: EmbeddingConfig

    Returns:
        Tensor [B, S, d] that carries no gradient
    """
    return Tensor(fused_array(ids, cfg), dtype=np.float32)


def embed_naive(ids, cfg):
    """Two-pass reference: normalise every id, then expand via an angle buffer.

    Args:
        ids: Integer array [B, S]
        cfg: EmbeddingConfig

    Returns:
        float32 array [B, S, d]
    """
    ids = np.asarray(ids, dtype=np.int64)
    check_ids(ids, cfg.vocab_size)
    x = 2.0 * ids / (cfg.vocab_size - 1) - 1.0
    freqs = np.arange(cfg.d_model) // 2 + 1
    angles = freqs * (math.pi * x)[..., None]
    out = np.empty(angles.shape, dtype=np.float32)
    out[..., 0::2] = np.sin(angles[..., 0::2])
    out[..., 1::2] = np.cos(angles[..., 1::2])
    return out


def base_table(cfg, ids=None):
    """Base embeddings for a list of ids (all ids by default) as [n, d]."""
    if ids is None:
        ids = np.arange(cfg.vocab_size, dtype=np.int64)
    ids = np.asarray(ids, dtype=np.int64).reshape(1, -1)
    return fused_array(ids, cfg)[0]
