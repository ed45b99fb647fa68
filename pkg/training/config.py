"""
PETE - Training Configuration
-----------------------------
This module defines the hyperparameters of the contrastive training loop.
"""

from dataclasses import dataclass, asdict, fields

import config
from exceptions import ConfigError


@dataclass
class TrainConfig:
    """Optimisation and bookkeeping settings for train_loop."""

    batch_size: int = config.BATCH_SIZE
    total_steps: int = config.TOTAL_STEPS
    peak_lr: float = config.PEAK_LR
    warmup_steps: int = config.WARMUP_STEPS
    weight_decay: float = config.WEIGHT_DECAY
    beta1: float = config.ADAM_BETA1
    beta2: float = config.ADAM_BETA2
    eps: float = config.ADAM_EPS
    seed: int = config.SEED
    log_every: int = config.LOG_EVERY
    checkpoint_every: int = config.CHECKPOINT_EVERY
    grad_clip: float = config.GRAD_CLIP_NORM

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2 for in-batch negatives, got {self.batch_size}")
        if self.total_steps < 1:
            raise ConfigError(f"total_steps must be positive, got {self.total_steps}")
        if not 0 <= self.warmup_steps <= self.total_steps:
            raise ConfigError(f"warmup_steps {self.warmup_steps} must lie in [0, total_steps={self.total_steps}]")
        if self.peak_lr <= 0:
            raise ConfigError(f"peak_lr must be positive, got {self.peak_lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        for name in ("beta1", "beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.log_every < 1 or self.checkpoint_every < 1:
            raise ConfigError("log_every and checkpoint_every must be positive")

    @property
    def betas(self):
        return (self.beta1, self.beta2)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown train config keys: {', '.join(unknown)}")
        return cls(**data)
