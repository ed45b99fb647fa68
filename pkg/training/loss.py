"""
PETE - Contrastive Loss
-----------------------
This module implements the symmetric InfoNCE loss over a batch of matched
sentence pairs, with a learnable temperature, and the in-batch retrieval
accuracy that goes with it.
"""

import logging

import numpy as np

from core import ops
from core.tensor import Tensor
from exceptions import ShapeError, NonFiniteError

logger = logging.getLogger(__name__)


def _diagonal_cross_entropy(logits, targets):
    # mean over rows of -log softmax(logits)[i, i]
    batch = logits.shape[0]
    return ops.mul(ops.sum(ops.mul(ops.log_softmax(logits), targets)), -1.0 / batch)


def info_nce_loss(a_vecs, b_vecs, logit_scale):
    """Symmetric cross-entropy over temperature-scaled cosine similarities.

    Args:
        a_vecs: Tensor [B, d]
        b_vecs: Tensor [B, d], row i is the positive for a_vecs row i
        logit_scale: Scalar Tensor (or float) s; similarities are scaled by exp(s)

    Returns:
        Scalar Tensor, mean over the batch of the two directions' losses / 2
    """
    if not isinstance(logit_scale, Tensor):
        logit_scale = Tensor(np.asarray(logit_scale, dtype=np.float64), dtype=a_vecs.dtype)
    if a_vecs.ndim != 2 or a_vecs.shape != b_vecs.shape:
        raise ShapeError("info_nce_loss", a_vecs.shape, b_vecs.shape)
    batch = a_vecs.shape[0]
    if batch < 2:
        raise ShapeError("info_nce_loss", a_vecs.shape, b_vecs.shape, "needs at least 2 pairs for negatives")

    # Cosine logits scaled by exp(s)
    a = ops.l2_normalize(a_vecs)
    b = ops.l2_normalize(b_vecs)
    logits = ops.mul(ops.matmul(a, ops.transpose(b)), ops.exp(logit_scale))
    targets = np.eye(batch, dtype=logits.dtype)

    # Average the a->b and b->a directions
    loss_ab = _diagonal_cross_entropy(logits, targets)
    loss_ba = _diagonal_cross_entropy(ops.transpose(logits), targets)
    return ops.mul(ops.add(loss_ab, loss_ba), 0.5)


def similarity_matrix(a_vecs, b_vecs):
    """Cosine similarity matrix [B, B] as a float64 array."""
    a = np.asarray(a_vecs.data if isinstance(a_vecs, Tensor) else a_vecs, dtype=np.float64)
    b = np.asarray(b_vecs.data if isinstance(b_vecs, Tensor) else b_vecs, dtype=np.float64)
    a_norm = np.linalg.norm(a, axis=1, keepdims=True)
    b_norm = np.linalg.norm(b, axis=1, keepdims=True)
    if (a_norm == 0).any() or (b_norm == 0).any():
        raise NonFiniteError("similarity_matrix", "zero-norm row")
    return (a / a_norm) @ (b / b_norm).T


def retrieval_accuracy(a_vecs, b_vecs):
    """Share of rows whose most similar partner is their own positive."""
    sims = similarity_matrix(a_vecs, b_vecs)
    return float(np.mean(np.argmax(sims, axis=1) == np.arange(sims.shape[0])))
