"""
Finite-difference checks of every backward rule, the Fourier embedding head,
one encoder block and the contrastive loss.

Each case runs over 20 seeds with inputs drawn from [-2, 2] (positive inputs
for log and rsqrt) and requires a max relative error below 1e-3.
"""

import numpy as np
import pytest

from core import ops
from core.gradcheck import grad_check, grad_check_param
from core.tensor import Tensor
from exceptions import TapeError
from model.encoder import build_model
from model.layers import EncoderLayer, rotary_tables
from training.loss import info_nce_loss

SEEDS = range(20)
TOLERANCE = 1e-3


def _weights(rng, shape):
    return Tensor(rng.uniform(-1.0, 1.0, size=shape), dtype=np.float64)


def _weighted_sum(out, w):
    return ops.sum(ops.mul(out, w))


def _unary(op, low=-2.0, high=2.0, shape=(3, 4)):
    def case(rng):
        x = rng.uniform(low, high, size=shape)
        w = _weights(rng, shape)
        return (lambda t: _weighted_sum(op(t), w)), x
    return case


def _binary(op, shape_b=(3, 4)):
    def case(rng):
        x = rng.uniform(-2, 2, size=(3, 4))
        other = Tensor(rng.uniform(-2, 2, size=shape_b), dtype=np.float64)
        w = _weights(rng, (3, 4))
        return (lambda t: _weighted_sum(op(t, other), w)), x
    return case


def _matmul_case(rng):
    x = rng.uniform(-2, 2, size=(3, 4))
    W = Tensor(rng.uniform(-2, 2, size=(4, 5)), dtype=np.float64)
    return (lambda t: ops.sum(ops.matmul(t, W))), x


def _matmul_right_case(rng):
    a = Tensor(rng.uniform(-2, 2, size=(2, 3, 4)), dtype=np.float64)
    w = _weights(rng, (2, 3, 5))
    return (lambda t: _weighted_sum(ops.matmul(a, t), w)), rng.uniform(-2, 2, size=(4, 5))


def _batched_matmul_case(rng):
    b = Tensor(rng.uniform(-2, 2, size=(2, 4, 3)), dtype=np.float64)
    w = _weights(rng, (2, 3, 3))
    return (lambda t: _weighted_sum(ops.matmul(t, b), w)), rng.uniform(-2, 2, size=(2, 3, 4))


def _reduction_case(op, axis, keepdims):
    def case(rng):
        x = rng.uniform(-2, 2, size=(3, 4))
        shape = np.sum(x, axis=axis, keepdims=keepdims).shape
        w = _weights(rng, shape)
        return (lambda t: _weighted_sum(op(t, axis=axis, keepdims=keepdims), w)), x
    return case


def _movement_case(op, out_shape):
    def case(rng):
        x = rng.uniform(-2, 2, size=(2, 3, 4))
        w = _weights(rng, out_shape)
        return (lambda t: _weighted_sum(op(t), w)), x
    return case


def _concat_case(rng):
    other = Tensor(rng.uniform(-2, 2, size=(3, 2)), dtype=np.float64)
    w = _weights(rng, (3, 6))
    return (lambda t: _weighted_sum(ops.concat([t, other]), w)), rng.uniform(-2, 2, size=(3, 4))


def _split_case(rng):
    w1, w2 = _weights(rng, (3, 1)), _weights(rng, (3, 3))

    def fn(t):
        left, right = ops.split(t, [1, 3])
        return ops.add(_weighted_sum(left, w1), _weighted_sum(ops.exp(right), w2))
    return fn, rng.uniform(-2, 2, size=(3, 4))


def _masked_fill_case(rng):
    mask = rng.random((3, 4)) < 0.3
    w = _weights(rng, (3, 4))
    return (lambda t: _weighted_sum(ops.softmax(ops.masked_fill(t, mask, -1e9)), w)), rng.uniform(-2, 2, size=(3, 4))


def _gather_case(rng):
    ids = rng.integers(0, 5, size=(2, 3))
    w = _weights(rng, (2, 3, 4))
    return (lambda t: _weighted_sum(ops.gather_rows(t, ids), w)), rng.uniform(-2, 2, size=(5, 4))


def _rotate_case(rng):
    cos_t, sin_t = rotary_tables(np.arange(3), 4)
    w = _weights(rng, (2, 3, 4))
    return (lambda t: _weighted_sum(ops.rotate_pairs(t, cos_t, sin_t), w)), rng.uniform(-2, 2, size=(2, 3, 4))


CASES = {
    "add": _binary(ops.add, (4,)),
    "sub": _binary(ops.sub),
    "mul": _binary(ops.mul),
    "scalar_mul": _unary(lambda t: ops.mul(t, 2.5)),
    "matmul": _matmul_case,
    "matmul_right": _matmul_right_case,
    "batched_matmul": _batched_matmul_case,
    "sin": _unary(ops.sin),
    "cos": _unary(ops.cos),
    "exp": _unary(ops.exp),
    "log": _unary(ops.log, 0.5, 2.0),
    "gelu": _unary(ops.gelu),
    "rsqrt": _unary(ops.rsqrt, 0.5, 2.0),
    "sum_axis": _reduction_case(ops.sum, -1, False),
    "mean_axis": _reduction_case(ops.mean, 0, False),
    "mean_keepdims": _reduction_case(ops.mean, -1, True),
    "softmax": _unary(ops.softmax),
    "log_softmax": _unary(ops.log_softmax),
    "l2_normalize": _unary(ops.l2_normalize, shape=(3, 6)),
    "transpose": _movement_case(ops.transpose, (2, 4, 3)),
    "permute": _movement_case(lambda t: ops.permute(t, (1, 0, 2)), (3, 2, 4)),
    "reshape": _movement_case(lambda t: ops.reshape(t, (6, 4)), (6, 4)),
    "concat": _concat_case,
    "split": _split_case,
    "masked_fill": _masked_fill_case,
    "gather_rows": _gather_case,
    "rotate_pairs": _rotate_case,
}


class TestOpGradients:
    """Backward rule of each differentiable op against central differences."""

    @pytest.mark.parametrize("name", sorted(CASES))
    def test_op(self, name):
        for seed in SEEDS:
            fn, x = CASES[name](np.random.default_rng(seed))
            error = grad_check(fn, x, h=1e-3)
            assert error < TOLERANCE, f"{name} seed {seed}: relative error {error:.2e}"

    def test_square_example(self):
        x = np.random.default_rng(0).uniform(-2, 2, size=4)
        assert grad_check(lambda t: ops.sum(ops.mul(t, t)), x) < TOLERANCE

    def test_constant_function(self):
        x = np.ones(3)
        assert grad_check(lambda t: ops.sum(Tensor(np.ones(3))), x) == 0.0

    def test_rejects_non_scalar(self):
        with pytest.raises(TapeError):
            grad_check(lambda t: ops.mul(t, t), np.ones(3))

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            grad_check(lambda t: ops.sum(t), np.ones(3), h=0.1)


class TestModelGradients:
    """End-to-end gradients through model parts."""

    def test_fourier_head_embedding(self, config_factory):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            model = build_model(config_factory(d_model=8, n_heads=1, head_ffn_factor=0.5, seed=seed))
            ids = rng.integers(0, 64, size=(2, 3))
            w = _weights(rng, (2, 3, 8))
            for name, param in model.embedding.named_parameters():
                # lift the head weights away from their tiny init so every path contributes
                param.data = rng.uniform(-1, 1, size=param.shape).astype(param.dtype)
                error = grad_check_param(lambda: _weighted_sum(model.embedding_forward(ids), w), param)
                assert error < TOLERANCE, f"seed {seed} {name}: relative error {error:.2e}"

    def test_encoder_block_input(self, config_factory):
        cfg = config_factory(d_model=8, n_heads=2, ffn_factor=2)
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            layer = EncoderLayer(cfg, name="layers.0", rng=rng)
            for param in layer.parameters():
                param.data = rng.uniform(-0.5, 0.5, size=param.shape).astype(param.dtype)
            mask = np.array([[1, 1, 1], [1, 1, 0]])
            w = _weights(rng, (2, 3, 8))
            x = rng.uniform(-2, 2, size=(2, 3, 8))
            error = grad_check(lambda t: _weighted_sum(layer(t, mask), w), x)
            assert error < TOLERANCE, f"seed {seed}: relative error {error:.2e}"

    def test_encoder_block_parameters(self, config_factory):
        cfg = config_factory(d_model=8, n_heads=2, ffn_factor=1)
        rng = np.random.default_rng(7)
        layer = EncoderLayer(cfg, name="layers.0", rng=rng)
        x = Tensor(rng.uniform(-2, 2, size=(2, 3, 8)))
        mask = np.ones((2, 3))
        w = _weights(rng, (2, 3, 8))
        for name, param in layer.named_parameters():
            error = grad_check_param(lambda: _weighted_sum(layer(x, mask), w), param)
            assert error < TOLERANCE, f"{name}: relative error {error:.2e}"

    def test_info_nce_inputs(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            a = rng.uniform(-2, 2, size=(4, 6))
            b = Tensor(rng.uniform(-2, 2, size=(4, 6)))
            assert grad_check(lambda t: info_nce_loss(t, b, 0.5), a) < TOLERANCE
            assert grad_check(lambda t: info_nce_loss(Tensor(a), t, 0.5), b.data) < TOLERANCE

    def test_info_nce_logit_scale(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            a = Tensor(rng.uniform(-2, 2, size=(4, 6)))
            b = Tensor(rng.uniform(-2, 2, size=(4, 6)))
            assert grad_check(lambda s: info_nce_loss(a, b, s), np.asarray(rng.uniform(-1, 1))) < TOLERANCE
