"""
PETE - Gradient Check
---------------------
This module compares tape gradients against central finite differences.

Finite differences are evaluated at 64-bit precision (inputs are promoted, and
every op computes in the promoted dtype), so the check measures the backward
rules rather than 32-bit rounding in the forward pass.
"""

import logging

import numpy as np

from core.tensor import Tensor, Tape, no_grad
from exceptions import TapeError

logger = logging.getLogger(__name__)


def _relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    denom = np.maximum(1.0, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def _scalar(out):
    if not isinstance(out, Tensor) or out.shape != ():
        shape = getattr(out, "shape", None)
        raise TapeError(f"grad_check needs a scalar-valued function, got shape {shape}")
    return out


def grad_check(fn, x, h=1e-3):
    """Max relative error between the analytic and finite-difference gradient.

    Args:
        fn: Function mapping a Tensor to a scalar Tensor
        x: Tensor (or array) at which to check
        h: Central-difference step, in [1e-4, 1e-2]

    Returns:
        max over coordinates of |analytic - numeric| / max(1, |analytic|)
    """
    if not 1e-4 <= h <= 1e-2:
        raise ValueError(f"finite-difference step {h} outside [1e-4, 1e-2]")
    values = x.data if isinstance(x, Tensor) else np.asarray(x)

    # Analytic pass at 64-bit, same precision as the numeric pass
    leaf = Tensor(values.copy(), requires_grad=True, dtype=np.float64)
    with Tape() as tape:
        out = _scalar(fn(leaf))
    if out.requires_grad:
        tape.backward(out)
    analytic = leaf.grad if leaf.grad is not None else np.zeros(leaf.shape)

    # Central differences, one coordinate at a time
    base = values.astype(np.float64)
    numeric = np.zeros_like(base)
    with no_grad():
        for idx in np.ndindex(base.shape):
            plus = base.copy()
            plus[idx] += h
            minus = base.copy()
            minus[idx] -= h
            f_plus = float(_scalar(fn(Tensor(plus, dtype=np.float64))).data)
            f_minus = float(_scalar(fn(Tensor(minus, dtype=np.float64))).data)
            numeric[idx] = (f_plus - f_minus) / (2.0 * h)

    error = _relative_error(analytic, numeric)
    logger.debug(f"grad_check over {base.size} coordinates: max relative error {error:.3e}")
    return error


def grad_check_param(fn, param, h=1e-3):
    """Gradient check with respect to a parameter used inside fn.

    Args:
        fn: Zero-argument function returning a scalar Tensor
        param: Leaf Tensor with requires_grad, perturbed in place and restored
        h: Central-difference step

    Returns:
        Max relative error as in grad_check
    """
    if not 1e-4 <= h <= 1e-2:
        raise ValueError(f"finite-difference step {h} outside [1e-4, 1e-2]")
    param.grad = None
    with Tape() as tape:
        out = _scalar(fn())
    if out.requires_grad:
        tape.backward(out)
    analytic = param.grad if param.grad is not None else np.zeros(param.shape)

    # Perturb a 64-bit working copy; the original array is restored afterwards
    original = param.data
    work = original.astype(np.float64)
    numeric = np.zeros_like(work)
    try:
        with no_grad():
            for idx in np.ndindex(work.shape):
                centre = work[idx]
                work[idx] = centre + h
                param.data = work
                f_plus = float(_scalar(fn()).data)
                work[idx] = centre - h
                f_minus = float(_scalar(fn()).data)
                work[idx] = centre
                numeric[idx] = (f_plus - f_minus) / (2.0 * h)
    finally:
        param.data = original
        param.grad = None

    return _relative_error(analytic, numeric)
