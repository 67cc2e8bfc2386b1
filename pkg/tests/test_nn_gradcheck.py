"""Finite-difference verification for every differentiable operation."""

import numpy as np
import pytest

from camfp.nn.gradcheck import gradcheck, make_inputs, project
from camfp.nn.layers import ResidualBlock
from camfp.nn.tensor import (
    add,
    avg_pool2x2,
    batch_norm2d,
    conv2d,
    cross_entropy,
    global_avg_pool,
    linear,
    relu,
    softmax,
    softmax_cross_entropy,
)

TOL = 1e-4


def _proj(rng, shape):
    return rng.standard_normal(shape)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("stride,pad,kernel", [(1, 1, 3), (2, 1, 3), (1, 0, 1)])
def test_conv2d_gradients(seed, stride, pad, kernel):
    rng = np.random.default_rng(seed * 17 + stride * 5 + kernel)
    n, cin, cout, hw = 2, 3, 4, 8
    xs = make_inputs(rng, (n, cin, hw, hw), (cout, cin, kernel, kernel), (cout,))
    out_hw = (hw + 2 * pad - kernel) // stride + 1
    proj = _proj(rng, (n, cout, out_hw, out_hw))
    err = gradcheck(lambda: project(conv2d(xs[0], xs[1], xs[2], stride, pad), proj), xs)
    assert err < TOL


@pytest.mark.parametrize("seed", range(2))
def test_relu_gradients(seed):
    rng = np.random.default_rng(seed + 99)
    xs = make_inputs(rng, (3, 7), away_from_zero=0.3)
    proj = _proj(rng, (3, 7))
    err = gradcheck(lambda: project(relu(xs[0]), proj), xs)
    assert err < TOL


def test_add_gradients(rng):
    xs = make_inputs(rng, (2, 4, 5, 5), (2, 4, 5, 5))
    proj = _proj(rng, (2, 4, 5, 5))
    assert gradcheck(lambda: project(add(xs[0], xs[1]), proj), xs) < TOL


def test_pool_gradients(rng):
    xs = make_inputs(rng, (2, 3, 8, 8))
    proj = _proj(rng, (2, 3, 4, 4))
    assert gradcheck(lambda: project(avg_pool2x2(xs[0]), proj), xs) < TOL
    xs2 = make_inputs(rng, (2, 5, 6, 6))
    proj2 = _proj(rng, (2, 5))
    assert gradcheck(lambda: project(global_avg_pool(xs2[0]), proj2), xs2) < TOL


@pytest.mark.parametrize("seed", range(2))
def test_linear_gradients(seed):
    rng = np.random.default_rng(seed + 7)
    xs = make_inputs(rng, (4, 6), (3, 6), (3,))
    proj = _proj(rng, (4, 3))
    assert gradcheck(lambda: project(linear(xs[0], xs[1], xs[2]), proj), xs) < TOL


@pytest.mark.parametrize("training", [True, False])
def test_batch_norm_gradients(rng, training):
    xs = make_inputs(rng, (3, 4, 5, 5), (4,), (4,))
    rm, rv = np.zeros(4), np.ones(4)
    proj = _proj(rng, (3, 4, 5, 5))
    err = gradcheck(
        lambda: project(
            batch_norm2d(xs[0], xs[1], xs[2], rm.copy(), rv.copy(), training=training), proj
        ),
        xs,
    )
    assert err < TOL


@pytest.mark.parametrize("seed", range(2))
def test_softmax_gradients(seed):
    rng = np.random.default_rng(seed + 31)
    xs = make_inputs(rng, (3, 5))
    proj = _proj(rng, (3, 5))
    assert gradcheck(lambda: project(softmax(xs[0]), proj), xs) < TOL


def test_cross_entropy_gradients(rng):
    y = np.zeros((3, 5))
    y[range(3), [1, 0, 4]] = 1.0
    p = np.abs(rng.standard_normal((3, 5))) + 0.3
    p /= p.sum(axis=1, keepdims=True)
    from camfp.nn import Tensor

    xs = [Tensor(p, requires_grad=True)]
    assert gradcheck(lambda: cross_entropy(xs[0], y), xs, eps=1e-6) < TOL


@pytest.mark.parametrize("seed", range(3))
def test_softmax_cross_entropy_gradients(seed):
    rng = np.random.default_rng(seed)
    xs = make_inputs(rng, (4, 6))
    y = np.zeros((4, 6))
    y[range(4), rng.integers(0, 6, 4)] = 1.0
    assert gradcheck(lambda: softmax_cross_entropy(xs[0], y), xs, eps=1e-6) < TOL


@pytest.mark.parametrize("stride,channels", [(1, (3, 3)), (2, (3, 5))])
def test_residual_block_gradients(stride, channels):
    rng = np.random.default_rng(stride * 13 + channels[1])
    cin, cout = channels
    block = ResidualBlock(cin, cout, stride=stride, rng=np.random.default_rng(5), dtype=np.float64)
    xs = make_inputs(rng, (2, cin, 8, 8))
    out_hw = 8 // stride
    proj = _proj(rng, (2, cout, out_hw, out_hw))

    def build():
        block.train()
        return project(block(xs[0]), proj)

    err = gradcheck(build, xs + block.parameters())
    assert err < TOL
