"""
PETE - Encoder
--------------
This module assembles the sentence encoder: an embedding head (Fourier base
plus residual MLP, or a learned table), a stack of encoder layers, a final
RMSNorm, masked average pooling and an optional sentence projection.
"""

import logging

import numpy as np

import config
from core import ops
from core.tensor import Tensor
from embedding.fourier import EmbeddingConfig, embed_batch_fused
from exceptions import DataError, ShapeError
from model.base_module import BaseModule
from model.config import ModelConfig
from model.layers import EncoderLayer, GeGLUFeedForward, Linear, RMSNorm

logger = logging.getLogger(__name__)


class FourierEmbedding(BaseModule):
    """E(p) = head(T(p)) + T(p) over the deterministic Fourier base T."""

    def __init__(self, cfg, name="embedding", rng=None):
        self.cfg = cfg
        self.embedding_config = EmbeddingConfig(cfg.vocab_size, cfg.d_model)
        super().__init__(name, rng)

    def _init_parameters(self, rng):
        cfg = self.cfg
        if cfg.head_kind == "linear":
            self.head = self.add_child("head", Linear(cfg.d_model, cfg.d_model, name=f"{self.name}.head", rng=rng))
        else:
            self.head = self.add_child(
                "head",
                GeGLUFeedForward(cfg.d_model, cfg.head_hidden, cfg.norm_eps, name=f"{self.name}.head", rng=rng),
            )

    def base(self, ids):
        """Deterministic base embeddings [B, S, d]; never carries a gradient."""
        base = embed_batch_fused(ids, self.embedding_config)
        if base.dtype != config.TENSOR_DTYPE:
            base = Tensor(base.data, dtype=config.TENSOR_DTYPE)
        return base

    def forward(self, ids):
        base = self.base(ids)
        if self.cfg.head_kind == "linear":
            return ops.add(base, self.head(base))
        # GeGLU block carries its own residual
        return self.head(base)


class LearnedEmbedding(BaseModule):
    """Conventional V x d lookup table."""

    def __init__(self, cfg, name="embedding", rng=None):
        self.cfg = cfg
        super().__init__(name, rng)

    def _init_parameters(self, rng):
        table = rng.normal(0.0, config.INIT_STD, size=(self.cfg.vocab_size, self.cfg.d_model))
        self.table = self.add_parameter("table", table)

    def forward(self, ids):
        return ops.gather_rows(self.table, np.asarray(ids, dtype=np.int64))


class Model(BaseModule):
    """Sentence encoder with a learnable contrastive temperature."""

    def __init__(self, cfg, rng=None):
        self.cfg = cfg
        super().__init__("", rng)
        # separate stream from initialisation
        self.dropout_rng = np.random.default_rng([cfg.seed, 1])

    def _init_parameters(self, rng):
        cfg = self.cfg
        embedding_cls = FourierEmbedding if cfg.embedding_kind == "fourier" else LearnedEmbedding
        self.embedding = self.add_child("embedding", embedding_cls(cfg, name="embedding", rng=rng))
        self.layers = [
            self.add_child(f"layers.{i}", EncoderLayer(cfg, name=f"layers.{i}", rng=rng))
            for i in range(cfg.n_layers)
        ]
        self.final_norm = self.add_child("final_norm", RMSNorm(cfg.d_model, cfg.norm_eps, name="final_norm", rng=rng))
        self.projection = None
        if cfg.use_projection:
            self.projection = self.add_child("projection", Linear(cfg.d_model, cfg.d_model, name="projection", rng=rng))
        self.logit_scale = self.add_parameter("logit_scale", np.asarray(config.LOGIT_SCALE_INIT))

    def forward(self, ids, mask):
        return self.encode(ids, mask)

    def embedding_forward(self, ids):
        """Token embeddings [B, S, d]."""
        return self.embedding(ids)

    def encode(self, ids, mask):
        """Sentence vectors [B, d].

        Args:
            ids: Integer array [B, S]
            mask: Array [B, S], 1 on valid tokens

        Returns:
            Tensor [B, d]
        """
        ids = np.asarray(ids, dtype=np.int64)
        mask = np.asarray(mask)
        if ids.ndim != 2 or mask.shape != ids.shape:
            raise ShapeError("encode", ids.shape, mask.shape, "ids and mask must both be [B, S]")
        counts = mask.sum(axis=1)
        if (counts == 0).any():
            row = int(np.argmin(counts))
            raise DataError(f"Row {row} of the batch has no valid tokens")

        # Embed and run the layers
        dropout_rng = self.dropout_rng if self.training and self.cfg.dropout_p > 0 else None
        h = self.embedding_forward(ids)
        for layer in self.layers:
            h = layer(h, mask, dropout_rng)
        h = self.final_norm(h)

        # Mean over valid positions only
        weights = mask.astype(h.dtype)[:, :, None]
        pooled = ops.mul(ops.sum(ops.mul(h, weights), axis=1), (1.0 / counts.astype(h.dtype))[:, None])
        if self.projection is not None:
            pooled = self.projection(pooled)
        return pooled

    def clamp_logit_scale(self):
        """Clamp the temperature into [ln(1/100), ln(100)]."""
        self.logit_scale.data = np.clip(
            self.logit_scale.data, config.LOGIT_SCALE_MIN, config.LOGIT_SCALE_MAX
        ).astype(self.logit_scale.dtype)

    def component_counts(self):
        """Allocated scalars grouped like param_count."""
        counts = dict.fromkeys(("embedding", "attention", "feed_forward", "norms", "projection", "logit_scale"), 0)
        for name, param in self.named_parameters():
            if name.startswith("embedding."):
                key = "embedding"
            elif name == "logit_scale":
                key = "logit_scale"
            elif name.startswith("projection."):
                key = "projection"
            elif name.endswith("norm.gain"):
                key = "norms"
            elif ".attention." in name:
                key = "attention"
            else:
                key = "feed_forward"
            counts[key] += param.size
        counts["total"] = sum(counts.values())
        return counts


def build_model(cfg, seed=None):
    """Build a freshly initialised model.

    Args:
        cfg: ModelConfig
        seed: Initialisation seed (defaults to cfg.seed)

    Returns:
        Model
    """
    if not isinstance(cfg, ModelConfig):
        cfg = ModelConfig.from_dict(cfg)
    seed = cfg.seed if seed is None else seed
    model = Model(cfg, np.random.default_rng(seed))
    logger.info(
        f"Built {cfg.embedding_kind} model: {cfg.n_layers} layer(s), d_model={cfg.d_model}, "
        f"{model.num_parameters():,} parameters"
    )
    return model


def embedding_forward(ids, model):
    """Token embeddings [B, S, d] for ids [B, S]."""
    return model.embedding_forward(ids)


def encode(ids, mask, model):
    """Pooled sentence vectors [B, d]."""
    return model.encode(ids, mask)
