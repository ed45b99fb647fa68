"""
PETE - Tensor Operations
------------------------
This module provides the forward operations of the tensor core together with
their backward rules.

Every operation validates shapes, computes its output with numpy, rejects
non-finite results, and records itself on the active tape when any input
requires a gradient. Broadcasting is trailing-aligned: an operand may lack
leading axes or hold size-1 (keepdims) axes.
"""

import math

import numpy as np

from core.tensor import Tensor, current_tape
from exceptions import ShapeError, NonFiniteError, TokenIdError

GELU_C = math.sqrt(2.0 / math.pi)
GELU_K = 0.044715


def _as_tensor(value, like=None):
    """Wrap a constant; constants take the dtype of their tensor partner."""
    if isinstance(value, Tensor):
        return value
    if like is not None:
        return Tensor(np.asarray(value), dtype=like.dtype)
    return Tensor(np.asarray(value))


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, _as_tensor(b, like=a)
    b = _as_tensor(b)
    return _as_tensor(a, like=b), b


def _result(op, out, inputs, backward_fn):
    """Build the output tensor and record the op when a gradient is needed."""
    dtype = np.result_type(*[t.dtype for t in inputs])
    out = np.asarray(out, dtype=dtype)
    if not np.isfinite(out).all():
        raise NonFiniteError(op, f"output shape {list(out.shape)}")
    result = Tensor._from_result(out, dtype)
    if any(t.requires_grad for t in inputs):
        tape = current_tape()
        if tape is not None:
            result.requires_grad = True
            tape.record(op, inputs, result, backward_fn)
    return result


def _check_broadcast(op, a, b):
    for da, db in zip(reversed(a.shape), reversed(b.shape)):
        if da != db and da != 1 and db != 1:
            raise ShapeError(op, a.shape, b.shape)


def _normalize_axis(axis, ndim):
    if axis is None:
        return None
    if isinstance(axis, (tuple, list)):
        return tuple(sorted(a % ndim for a in axis))
    return axis % ndim


# Elementwise binary ops

def add(a, b):
    a, b = _pair(a, b)
    _check_broadcast("add", a, b)

    def backward(g):
        return g, g

    return _result("add", a.data + b.data, (a, b), backward)


def sub(a, b):
    a, b = _pair(a, b)
    _check_broadcast("sub", a, b)

    def backward(g):
        return g, -g

    return _result("sub", a.data - b.data, (a, b), backward)


def mul(a, b):
    """Elementwise product; a python scalar operand gives scalar multiplication."""
    a, b = _pair(a, b)
    _check_broadcast("mul", a, b)
    a_data, b_data = a.data, b.data

    def backward(g):
        return g * b_data, g * a_data

    return _result("mul", a_data * b_data, (a, b), backward)


def matmul(a, b):
    """Matrix product over the last two axes.

    Supports [m,k]@[k,n], batched [...,m,k]@[...,k,n] with equal leading axes,
    and [...,m,k]@[k,n] with a shared right operand.
    """
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise ShapeError("matmul", a.shape, b.shape, "leading axes differ")
    a_data, b_data = a.data, b.data

    def backward(g):
        ga = g @ np.swapaxes(b_data, -1, -2)
        # Shared right operand: fold every leading axis into the row axis
        if b_data.ndim == 2:
            gb = a_data.reshape(-1, a_data.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.swapaxes(a_data, -1, -2) @ g
        return ga, gb

    return _result("matmul", a_data @ b_data, (a, b), backward)


# Elementwise unary ops

def sin(x):
    x = _as_tensor(x)
    x_data = x.data

    def backward(g):
        return (g * np.cos(x_data),)

    return _result("sin", np.sin(x_data), (x,), backward)


def cos(x):
    x = _as_tensor(x)
    x_data = x.data

    def backward(g):
        return (-g * np.sin(x_data),)

    return _result("cos", np.cos(x_data), (x,), backward)


def exp(x):
    x = _as_tensor(x)
    with np.errstate(over="ignore"):
        out = np.exp(x.data)

    def backward(g):
        return (g * out,)

    return _result("exp", out, (x,), backward)


def log(x):
    x = _as_tensor(x)
    x_data = x.data
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x_data)

    def backward(g):
        return (g / x_data,)

    return _result("log", out, (x,), backward)


def gelu(x):
    """GELU, tanh approximation."""
    x = _as_tensor(x)
    x_data = x.data
    inner = GELU_C * (x_data + GELU_K * x_data ** 3)
    t = np.tanh(inner)

    def backward(g):
        d_inner = GELU_C * (1.0 + 3.0 * GELU_K * x_data ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x_data * (1.0 - t * t) * d_inner),)

    return _result("gelu", 0.5 * x_data * (1.0 + t), (x,), backward)


def rsqrt(x):
    x = _as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 / np.sqrt(x.data)

    def backward(g):
        return (g * (-0.5) * out ** 3,)

    return _result("rsqrt", out, (x,), backward)


# Reductions

def sum(x, axis=None, keepdims=False):
    x = _as_tensor(x)
    axis = _normalize_axis(axis, x.ndim)
    shape = x.shape

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _result("sum", x.data.sum(axis=axis, keepdims=keepdims), (x,), backward)


def mean(x, axis=None, keepdims=False):
    x = _as_tensor(x)
    axis = _normalize_axis(axis, x.ndim)
    shape = x.shape
    if axis is None:
        count = x.size
    elif isinstance(axis, tuple):
        count = int(np.prod([shape[a] for a in axis]))
    else:
        count = shape[axis]

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, shape).copy(),)

    return _result("mean", x.data.mean(axis=axis, keepdims=keepdims), (x,), backward)


def softmax(x):
    """Softmax over the last axis."""
    x = _as_tensor(x)
    # Shift by the row max before exponentiating
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _result("softmax", out, (x,), backward)


def log_softmax(x):
    """Log-softmax over the last axis."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def backward(g):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return _result("log_softmax", out, (x,), backward)


# Movement ops

def transpose(x):
    """Swap the last two axes."""
    x = _as_tensor(x)
    if x.ndim < 2:
        raise ShapeError("transpose", x.shape, detail="needs at least 2 axes")

    def backward(g):
        return (np.swapaxes(g, -1, -2),)

    return _result("transpose", np.swapaxes(x.data, -1, -2), (x,), backward)


def permute(x, axes):
    x = _as_tensor(x)
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError("permute", x.shape, detail=f"bad axes {axes}")
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _result("permute", np.transpose(x.data, axes), (x,), backward)


def reshape(x, shape):
    x = _as_tensor(x)
    original = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", original, tuple(shape))

    def backward(g):
        return (g.reshape(original),)

    return _result("reshape", out, (x,), backward)


def concat(tensors, axis=-1):
    """Concatenate along the last axis."""
    tensors = [_as_tensor(t) for t in tensors]
    if axis not in (-1, tensors[0].ndim - 1):
        raise ShapeError("concat", tensors[0].shape, detail="only the last axis is supported")
    lead = tensors[0].shape[:-1]
    for t in tensors[1:]:
        if t.shape[:-1] != lead:
            raise ShapeError("concat", tensors[0].shape, t.shape)
    bounds = np.cumsum([t.shape[-1] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=-1))

    out = np.concatenate([t.data for t in tensors], axis=-1)
    return _result("concat", out, tuple(tensors), backward)


def slice_last(x, start, stop):
    """Select x[..., start:stop]."""
    x = _as_tensor(x)
    width = x.shape[-1]
    if not 0 <= start < stop <= width:
        raise ShapeError("slice_last", x.shape, detail=f"range [{start}, {stop})")
    shape = x.shape

    def backward(g):
        full = np.zeros(shape, dtype=g.dtype)
        full[..., start:stop] = g
        return (full,)

    return _result("slice_last", x.data[..., start:stop], (x,), backward)


def split(x, sizes):
    """Split along the last axis into pieces of the given widths."""
    x = _as_tensor(x)
    if isinstance(sizes, int):
        if x.shape[-1] % sizes:
            raise ShapeError("split", x.shape, detail=f"not divisible into {sizes}")
        sizes = [x.shape[-1] // sizes] * sizes
    if int(np.sum(sizes)) != x.shape[-1]:
        raise ShapeError("split", x.shape, detail=f"sizes {list(sizes)}")
    pieces, start = [], 0
    for size in sizes:
        pieces.append(slice_last(x, start, start + size))
        start += size
    return pieces


# Normalisation and masking

def l2_normalize(x):
    """Scale each row (last axis) to unit Euclidean norm."""
    x = _as_tensor(x)
    norms = np.sqrt((x.data * x.data).sum(axis=-1, keepdims=True))
    if (norms == 0).any():
        rows = np.argwhere(norms[..., 0] == 0)
        raise NonFiniteError("l2_normalize", f"zero-norm row at {tuple(rows[0])}")
    out = x.data / norms

    def backward(g):
        return ((g - out * (g * out).sum(axis=-1, keepdims=True)) / norms,)

    return _result("l2_normalize", out, (x,), backward)


def masked_fill(x, mask, value):
    """Replace entries where mask is true with a constant."""
    x = _as_tensor(x)
    mask = np.asarray(mask, dtype=bool)
    try:
        np.broadcast_shapes(mask.shape, x.shape)
    except ValueError:
        raise ShapeError("masked_fill", x.shape, mask.shape)
    out = np.where(mask, np.asarray(value, dtype=x.dtype), x.data)

    def backward(g):
        return (np.where(mask, 0.0, g),)

    return _result("masked_fill", out, (x,), backward)


# Model-specific primitives

def gather_rows(table, ids):
    """Look up rows of a [V, d] table; only looked-up rows receive gradient."""
    table = _as_tensor(table)
    ids = np.asarray(ids)
    if table.ndim != 2:
        raise ShapeError("gather_rows", table.shape, ids.shape)
    vocab_size = table.shape[0]
    bad = np.argwhere((ids < 0) | (ids >= vocab_size))
    if bad.size:
        position = tuple(int(i) for i in bad[0])
        raise TokenIdError(int(ids[position]), vocab_size, position)
    shape = table.shape

    def backward(g):
        full = np.zeros(shape, dtype=g.dtype)
        np.add.at(full, ids, g)
        return (full,)

    return _result("gather_rows", table.data[ids], (table,), backward)


def rotate_pairs(x, cos_table, sin_table):
    """Rotate consecutive coordinate pairs (2j, 2j+1) by per-position angles.

    Args:
        x: Tensor [..., S, hd] with hd even
        cos_table: ndarray [S, hd/2]
        sin_table: ndarray [S, hd/2]
    """
    x = _as_tensor(x)
    if x.shape[-1] % 2:
        raise ShapeError("rotate_pairs", x.shape, detail="odd last axis")
    if tuple(cos_table.shape) != (x.shape[-2], x.shape[-1] // 2):
        raise ShapeError("rotate_pairs", x.shape, cos_table.shape)
    cos_t = np.asarray(cos_table, dtype=x.dtype)
    sin_t = np.asarray(sin_table, dtype=x.dtype)
    a, b = x.data[..., 0::2], x.data[..., 1::2]
    out = np.empty_like(x.data)
    out[..., 0::2] = a * cos_t - b * sin_t
    out[..., 1::2] = a * sin_t + b * cos_t

    def backward(g):
        ga, gb = g[..., 0::2], g[..., 1::2]
        grad = np.empty_like(g)
        grad[..., 0::2] = ga * cos_t + gb * sin_t
        grad[..., 1::2] = -ga * sin_t + gb * cos_t
        return (grad,)

    return _result("rotate_pairs", out, (x,), backward)


def dropout(x, p, rng):
    """Inverted dropout with a mask drawn from a numpy Generator."""
    if p <= 0.0:
        return x
    # Kept entries are scaled by 1/(1-p)
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    return mul(x, keep)
