"""
PETE - Model Configuration
--------------------------
This module defines the encoder configuration and its closed-form parameter
count.
"""

import logging
from dataclasses import dataclass, asdict, fields
from fractions import Fraction

import config
from exceptions import ConfigError

logger = logging.getLogger(__name__)

EMBEDDING_KINDS = ("fourier", "learned")
HEAD_KINDS = ("geglu", "linear")


def hidden_width(d_model, factor):
    """FFN hidden width round(d * factor)."""
    return int(round(d_model * float(factor)))


@dataclass
class ModelConfig:
    """Encoder hyperparameters.

    dropout_p defaults to the baseline dropout for the learned embedding and
    to 0 for the Fourier embedding, which never uses dropout.
    """

    n_layers: int = config.N_LAYERS
    n_heads: int = config.N_HEADS
    d_model: int = config.D_MODEL
    ffn_factor: float = config.FFN_FACTOR
    embedding_kind: str = config.EMBEDDING_KIND
    vocab_size: int = config.VOCAB_SIZE
    dropout_p: float = None
    max_seq_len: int = config.MAX_SEQ_LEN
    seed: int = config.SEED
    head_ffn_factor: float = config.HEAD_FFN_FACTOR
    head_kind: str = config.HEAD_KIND
    use_projection: bool = config.USE_PROJECTION
    rotary_base: float = config.ROTARY_BASE
    norm_eps: float = config.RMSNORM_EPS

    def __post_init__(self):
        if isinstance(self.ffn_factor, (Fraction, str)):
            self.ffn_factor = float(Fraction(self.ffn_factor))
        if isinstance(self.head_ffn_factor, (Fraction, str)):
            self.head_ffn_factor = float(Fraction(self.head_ffn_factor))

        if self.embedding_kind not in EMBEDDING_KINDS:
            raise ConfigError(f"embedding_kind must be one of {EMBEDDING_KINDS}, got {self.embedding_kind!r}")
        if self.head_kind not in HEAD_KINDS:
            raise ConfigError(f"head_kind must be one of {HEAD_KINDS}, got {self.head_kind!r}")
        for name in ("n_layers", "n_heads", "d_model", "max_seq_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.vocab_size < 2:
            raise ConfigError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model {self.d_model} is not divisible by n_heads {self.n_heads}")
        if self.head_dim % 2:
            raise ConfigError(f"head_dim {self.head_dim} must be even for rotary pairs")
        if self.ffn_hidden < 1:
            raise ConfigError(f"ffn hidden width round({self.d_model} * {self.ffn_factor}) must be >= 1")
        if self.embedding_kind == "fourier" and self.head_kind == "geglu" and self.head_hidden < 1:
            raise ConfigError(f"head hidden width round({self.d_model} * {self.head_ffn_factor}) must be >= 1")
        if self.norm_eps <= 0:
            raise ConfigError(f"norm_eps must be positive, got {self.norm_eps}")

        if self.dropout_p is None:
            self.dropout_p = config.BASELINE_DROPOUT if self.embedding_kind == "learned" else 0.0
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.embedding_kind == "fourier" and self.dropout_p > 0:
            logger.warning(f"Fourier embedding omits dropout; forcing dropout_p {self.dropout_p} to 0")
            self.dropout_p = 0.0

    @property
    def head_dim(self):
        return self.d_model // self.n_heads

    @property
    def ffn_hidden(self):
        return hidden_width(self.d_model, self.ffn_factor)

    @property
    def head_hidden(self):
        return hidden_width(self.d_model, self.head_ffn_factor)

    def to_dict(self):
        """Convert to a JSON-compatible dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        """Create a config from a dictionary.

        Args:
            data: Dictionary written by to_dict

        Returns:
            ModelConfig
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown model config keys: {', '.join(unknown)}")
        return cls(**data)


def param_count(cfg):
    """Exact parameter count per component.

    Args:
        cfg: ModelConfig

    Returns:
        Dictionary with embedding, attention, feed_forward, norms, projection,
        logit_scale and total counts
    """
    d = cfg.d_model
    if cfg.embedding_kind == "learned":
        embedding = cfg.vocab_size * d
    elif cfg.head_kind == "linear":
        embedding = d * d
    else:
        # GeGLU head: two input projections, output projection, pre-norm gain
        embedding = 3 * d * cfg.head_hidden + d

    attention = cfg.n_layers * 4 * d * d
    feed_forward = cfg.n_layers * 3 * d * cfg.ffn_hidden
    norms = cfg.n_layers * 2 * d + d
    projection = d * d if cfg.use_projection else 0

    counts = {
        "embedding": embedding,
        "attention": attention,
        "feed_forward": feed_forward,
        "norms": norms,
        "projection": projection,
        "logit_scale": 1,
    }
    counts["total"] = sum(counts.values())
    return counts
