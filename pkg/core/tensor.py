"""
PETE - Tensor
-------------
This module defines the dense Tensor type and the computation tape that
records executed operations for reverse-mode differentiation.

A tape records one forward pass. Backward walks the records in exact reverse
execution order and consumes the tape; running backward again without a new
forward pass (or an explicit reset) is an error.
"""

import logging
import threading
from contextlib import contextmanager

import numpy as np

import config
from exceptions import TapeError

logger = logging.getLogger(__name__)

_state = threading.local()


class TapeRecord:
    """One executed operation on the tape."""

    __slots__ = ("op", "inputs", "output", "backward_fn")

    def __init__(self, op, inputs, output, backward_fn):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of executed operations.

    Used as a context manager to scope recording:

        with Tape() as tape:
            loss = model_loss(...)
        tape.backward(loss)
    """

    def __init__(self):
        self.records = []
        self.consumed = False

    def __len__(self):
        return len(self.records)

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def record(self, op, inputs, output, backward_fn):
        """Append an executed operation.

        Args:
            op: Operation name
            inputs: Tuple of input Tensors
            output: Output Tensor
            backward_fn: Maps the output gradient to a tuple of input gradients
        """
        if self.consumed:
            # A new forward pass after backward starts a fresh recording
            self.reset()
        rec = TapeRecord(op, inputs, output, backward_fn)
        self.records.append(rec)
        output._creator = rec
        output._tape = self

    def reset(self):
        """Forget all records so the tape can record a new pass."""
        for rec in self.records:
            rec.output._tape = None
        self.records = []
        self.consumed = False

    def backward(self, loss):
        """Populate .grad on every leaf that requires a gradient.

        Args:
            loss: Scalar Tensor produced on this tape
        """
        if loss.shape != ():
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if self.consumed:
            raise TapeError("backward already ran on this tape; reset() or record a new pass first")
        if not self.records or loss._tape is not self:
            raise TapeError("backward on an empty tape: loss was not recorded")

        # Seed with d(loss)/d(loss) = 1 and walk the records backwards
        grads = {id(loss): np.ones((), dtype=loss.dtype)}
        for rec in reversed(self.records):
            grad_out = grads.pop(id(rec.output), None)
            if grad_out is None:
                continue
            input_grads = rec.backward_fn(grad_out)
            for tensor, grad in zip(rec.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                grad = _unbroadcast(np.asarray(grad), tensor.shape)
                # Leaves accumulate; intermediates pass the gradient on
                if tensor.is_leaf:
                    grad = grad.astype(tensor.dtype, copy=False)
                    tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
                else:
                    key = id(tensor)
                    grads[key] = grad if key not in grads else grads[key] + grad

        self.consumed = True
        logger.debug(f"Backward through {len(self.records)} recorded ops")


class Tensor:
    """Dense row-major array of floats with an optional gradient buffer."""

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        """Initialize a tensor.

        Args:
            data: Array-like values (or another Tensor)
            requires_grad: Whether backward should populate .grad
            dtype: Float dtype, defaults to config.TENSOR_DTYPE
            name: Optional label used in diagnostics
        """
        if isinstance(data, Tensor):
            data = data.data
        # order="C" keeps 0-d scalars 0-d
        self.data = np.asarray(data, dtype=dtype or config.TENSOR_DTYPE, order="C")
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._creator = None
        self._tape = None

    @classmethod
    def _from_result(cls, array, dtype):
        out = cls.__new__(cls)
        out.data = np.asarray(array, dtype=dtype, order="C")
        out.requires_grad = False
        out.grad = None
        out.name = None
        out._creator = None
        out._tape = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self):
        return self._creator is None

    def numpy(self):
        """Return a copy of the values as a numpy array."""
        return self.data.copy()

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data.copy(), dtype=self.dtype)

    def backward(self):
        backward(self)

    # Operator overloads delegate to core.ops
    def __add__(self, other):
        from core import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from core import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from core import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from core import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from core import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from core import ops
        return ops.mul(other, self)

    def __neg__(self):
        from core import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from core import ops
        return ops.matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        from core import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        from core import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        from core import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self):
        from core import ops
        return ops.transpose(self)

    def __repr__(self):
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={list(self.shape)}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"


def _tape_stack():
    stack = getattr(_state, "tapes", None)
    if stack is None:
        stack = []
        _state.tapes = stack
    return stack


def grad_enabled():
    return getattr(_state, "grad_enabled", True)


def current_tape():
    """Return the innermost active tape on this thread.

    Returns None under no_grad or outside any `with Tape()` block, so bare
    forward passes (inference, evaluation) record nothing.
    """
    if not grad_enabled():
        return None
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextmanager
def no_grad():
    """Disable tape recording on this thread."""
    previous = grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def backward(loss):
    """Run reverse-mode differentiation from a scalar loss.

    Args:
        loss: Scalar Tensor
    """
    if loss.shape != ():
        raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._tape is None:
        raise TapeError("backward on an empty tape: loss was not recorded")
    loss._tape.backward(loss)


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to an operand's shape."""
    shape = tuple(shape)
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)
