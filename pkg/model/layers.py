"""
PETE - Encoder Layers
---------------------
This module implements the building blocks of the encoder: RMSNorm, bias-free
linear layers, rotary position encoding, pre-norm multi-head attention and the
GeGLU feed-forward block.
"""

import math
import logging

import numpy as np

import config
from core import ops
from core.tensor import Tensor
from exceptions import ConfigError, ShapeError
from model.base_module import BaseModule, truncated_normal

logger = logging.getLogger(__name__)


def rmsnorm(x, gain, eps=config.RMSNORM_EPS):
    """y = x / sqrt(mean(x^2) + eps) * gain over the last axis."""
    if eps <= 0:
        raise ConfigError(f"rmsnorm eps must be positive, got {eps}")
    scale = ops.rsqrt(ops.mean(ops.mul(x, x), axis=-1, keepdims=True) + eps)
    return ops.mul(ops.mul(x, scale), gain)


def rotary_tables(positions, head_dim, base=config.ROTARY_BASE):
    """Cosine and sine tables [S, hd/2] for angle m * base^(-2j/hd).

    Args:
        positions: Integer positions [S]
        head_dim: Even head dimension
        base: Rotary base

    Returns:
        (cos_table, sin_table) as float64 arrays
    """
    if head_dim % 2 or head_dim < 2:
        raise ConfigError(f"rotary encoding needs an even head dimension, got {head_dim}")
    inv_freq = base ** (-np.arange(0, head_dim, 2, dtype=np.float64) / head_dim)
    angles = np.outer(np.asarray(positions, dtype=np.float64), inv_freq)
    return np.cos(angles), np.sin(angles)


def rotary_apply(x, positions, base=config.ROTARY_BASE):
    """Rotate consecutive (2j, 2j+1) pairs of q or k [B, H, S, hd] by position."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    cos_table, sin_table = rotary_tables(positions, x.shape[-1], base)
    return ops.rotate_pairs(x, cos_table, sin_table)


class RMSNorm(BaseModule):
    """Root-mean-square normalisation with a learned gain."""

    def __init__(self, d_model, eps=config.RMSNORM_EPS, name="norm", rng=None):
        self.d_model = d_model
        self.eps = eps
        super().__init__(name, rng)

    def _init_parameters(self, rng):
        self.gain = self.add_parameter("gain", np.ones(self.d_model))

    def forward(self, x):
        return rmsnorm(x, self.gain, self.eps)


class Linear(BaseModule):
    """Bias-free linear layer y = x @ W with W [in, out]."""

    def __init__(self, d_in, d_out, name="linear", rng=None):
        self.d_in = d_in
        self.d_out = d_out
        super().__init__(name, rng)

    def _init_parameters(self, rng):
        self.weight = self.add_parameter("weight", truncated_normal(rng, (self.d_in, self.d_out)))

    def forward(self, x):
        return ops.matmul(x, self.weight)


class GeGLUFeedForward(BaseModule):
    """Pre-norm GeGLU block with residual: x + W_out(gelu(n W_a) * (n W_b))."""

    def __init__(self, d_model, hidden, eps=config.RMSNORM_EPS, dropout_p=0.0, name="ffn", rng=None):
        self.d_model = d_model
        self.hidden = hidden
        self.eps = eps
        self.dropout_p = dropout_p
        super().__init__(name, rng)

    def _init_parameters(self, rng):
        self.norm = self.add_child("norm", RMSNorm(self.d_model, self.eps, name=f"{self.name}.norm", rng=rng))
        self.w_a = self.add_child("w_a", Linear(self.d_model, self.hidden, name=f"{self.name}.w_a", rng=rng))
        self.w_b = self.add_child("w_b", Linear(self.d_model, self.hidden, name=f"{self.name}.w_b", rng=rng))
        self.w_out = self.add_child("w_out", Linear(self.hidden, self.d_model, name=f"{self.name}.w_out", rng=rng))

    def forward(self, x, dropout_rng=None):
        # Gate the two projections
        n = self.norm(x)
        gated = ops.mul(ops.gelu(self.w_a(n)), self.w_b(n))
        out = self.w_out(gated)
        if self.training and dropout_rng is not None:
            out = ops.dropout(out, self.dropout_p, dropout_rng)
        return ops.add(x, out)


class Attention(BaseModule):
    """Pre-norm multi-head self-attention with rotary q/k and a residual."""

    def __init__(self, cfg, name="attention", rng=None):
        self.cfg = cfg
        super().__init__(name, rng)
        cos_table, sin_table = rotary_tables(np.arange(cfg.max_seq_len), cfg.head_dim, cfg.rotary_base)
        self._cos = cos_table
        self._sin = sin_table

    def _init_parameters(self, rng):
        d = self.cfg.d_model
        self.norm = self.add_child("norm", RMSNorm(d, self.cfg.norm_eps, name=f"{self.name}.norm", rng=rng))
        self.wq = self.add_child("wq", Linear(d, d, name=f"{self.name}.wq", rng=rng))
        self.wk = self.add_child("wk", Linear(d, d, name=f"{self.name}.wk", rng=rng))
        self.wv = self.add_child("wv", Linear(d, d, name=f"{self.name}.wv", rng=rng))
        self.wo = self.add_child("wo", Linear(d, d, name=f"{self.name}.wo", rng=rng))

    def _split_heads(self, t, B, S):
        H, hd = self.cfg.n_heads, self.cfg.head_dim
        return ops.permute(ops.reshape(t, (B, S, H, hd)), (0, 2, 1, 3))

    def forward(self, x, mask, dropout_rng=None):
        """Attend over valid positions.

        Args:
            x: Tensor [B, S, d]
            mask: Array [B, S], 1 on valid tokens and 0 on padding
            dropout_rng: Generator for baseline dropout (None disables it)

        Returns:
            Tensor [B, S, d]
        """
        B, S, d = x.shape
        mask = np.asarray(mask)
        if mask.shape != (B, S):
            raise ShapeError("attention_block", x.shape, mask.shape, "mask must be [B, S]")
        if S > self.cfg.max_seq_len:
            raise ShapeError("attention_block", x.shape, detail=f"sequence longer than max_seq_len {self.cfg.max_seq_len}")

        # Project and rotate q, k per head
        n = self.norm(x)
        cos_table, sin_table = self._cos[:S], self._sin[:S]
        q = ops.rotate_pairs(self._split_heads(self.wq(n), B, S), cos_table, sin_table)
        k = ops.rotate_pairs(self._split_heads(self.wk(n), B, S), cos_table, sin_table)
        v = self._split_heads(self.wv(n), B, S)

        # Scaled scores with padded keys masked out
        scores = ops.mul(ops.matmul(q, ops.transpose(k)), 1.0 / math.sqrt(self.cfg.head_dim))
        padded_keys = (mask == 0)[:, None, None, :]
        probs = ops.softmax(ops.masked_fill(scores, padded_keys, config.MASK_FILL_VALUE))

        # Merge heads and project back
        context = ops.reshape(ops.permute(ops.matmul(probs, v), (0, 2, 1, 3)), (B, S, d))
        out = self.wo(context)
        if self.training and dropout_rng is not None:
            out = ops.dropout(out, self.cfg.dropout_p, dropout_rng)
        return ops.add(x, out)


class EncoderLayer(BaseModule):
    """One attention block followed by one GeGLU block."""

    def __init__(self, cfg, name="layer", rng=None):
        self.cfg = cfg
        super().__init__(name, rng)

    def _init_parameters(self, rng):
        cfg = self.cfg
        self.attention = self.add_child("attention", Attention(cfg, name=f"{self.name}.attention", rng=rng))
        self.ffn = self.add_child(
            "ffn",
            GeGLUFeedForward(cfg.d_model, cfg.ffn_hidden, cfg.norm_eps, cfg.dropout_p, name=f"{self.name}.ffn", rng=rng),
        )

    def forward(self, x, mask, dropout_rng=None):
        return self.ffn(self.attention(x, mask, dropout_rng), dropout_rng)


def attention_block(x, mask, layer, dropout_rng=None):
    """x + Attn(RMSNorm(x)) for one layer's attention parameters."""
    return layer.attention(x, mask, dropout_rng)


def geglu_ffn(x, layer, dropout_rng=None):
    """x + W_out(gelu(n W_a) * (n W_b)) for one layer's feed-forward parameters."""
    return layer.ffn(x, dropout_rng)
