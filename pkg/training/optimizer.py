"""
PETE - Optimizer
----------------
This module implements AdamW with decoupled weight decay and global-norm
gradient clipping.

    p <- p - lr * wd * p
    m <- b1 * m + (1 - b1) * g
    v <- b2 * v + (1 - b2) * g^2
    p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
"""

import logging
from dataclasses import dataclass, field

import numpy as np

import config
from exceptions import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    """First/second moment buffers per parameter and the step counter."""

    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params):
        return cls(
            m=[np.zeros(p.shape, dtype=p.dtype) for p in params],
            v=[np.zeros(p.shape, dtype=p.dtype) for p in params],
        )


@dataclass
class AdamWSettings:
    """Hyperparameters read by adamw_step (a TrainConfig also qualifies)."""

    beta1: float = config.ADAM_BETA1
    beta2: float = config.ADAM_BETA2
    eps: float = config.ADAM_EPS
    weight_decay: float = config.WEIGHT_DECAY


def adamw_step(params, grads, state, lr_t, cfg, names=None):
    """Apply one AdamW update in place.

    Args:
        params: List of parameter Tensors
        grads: List of gradient arrays (None counts as zero)
        state: OptimizerState matching params
        lr_t: Learning rate for this step (>= 0)
        cfg: Object with beta1, beta2, eps and weight_decay
        names: Optional parameter names used in diagnostics

    Returns:
        The updated state
    """
    if lr_t < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr_t}")
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeError("adamw_step", (len(params),), (len(grads),), "params, grads and state differ in length")
    names = names or [p.name or f"param_{i}" for i, p in enumerate(params)]

    # Check everything before touching any parameter
    for name, param, grad in zip(names, params, grads):
        if grad is None:
            continue
        if grad.shape != param.shape:
            raise ShapeError("adamw_step", param.shape, grad.shape, f"gradient of {name}")
        if not np.isfinite(grad).all():
            raise NonFiniteError("adamw_step", f"NaN/Inf gradient in parameter {name}")

    # Bias corrections for this step
    state.step += 1
    b1, b2 = cfg.beta1, cfg.beta2
    bias1 = 1.0 - b1 ** state.step
    bias2 = 1.0 - b2 ** state.step

    for i, (param, grad) in enumerate(zip(params, grads)):
        if grad is None:
            grad = np.zeros(param.shape, dtype=param.dtype)
        # Moment estimates
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad * grad
        # Decoupled weight decay, then the Adam step
        decayed = param.data - lr_t * cfg.weight_decay * param.data
        update = lr_t * (state.m[i] / bias1) / (np.sqrt(state.v[i] / bias2) + cfg.eps)
        param.data = np.asarray(decayed - update, dtype=param.dtype)

    return state


def clip_grad_norm(params, max_norm):
    """Scale gradients so their global L2 norm is at most max_norm.

    Args:
        params: Parameter Tensors
        max_norm: Threshold; None or <= 0 disables clipping

    Returns:
        Global norm before clipping
    """
    grads = [p.grad for p in params if p.grad is not None]
    total = float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads)))
    if max_norm and max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad = (p.grad * scale).astype(p.dtype)
    return total


class AdamW:
    """AdamW over a model's named parameters."""

    def __init__(self, named_params, cfg):
        """Initialize the optimizer.

        Args:
            named_params: List of (name, Tensor)
            cfg: Object with beta1, beta2, eps and weight_decay
        """
        self.names = [name for name, _ in named_params]
        self.params = [param for _, param in named_params]
        self.cfg = cfg
        self.state = OptimizerState.for_params(self.params)

    def step(self, lr_t):
        adamw_step(self.params, [p.grad for p in self.params], self.state, lr_t, self.cfg, self.names)

    def zero_grad(self):
        for param in self.params:
            param.zero_grad()
