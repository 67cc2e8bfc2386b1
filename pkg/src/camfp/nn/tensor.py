"""Minimal reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray plus an optional gradient buffer; ops build a
graph of backward closures and Tensor.backward() walks it in reverse
topological order. Convolutions run as im2col + GEMM so training speed is
bounded by BLAS, not Python.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def zero_grad(self):
        self.grad = None

    def accumulate(self, g: np.ndarray):
        self.grad = g if self.grad is None else self.grad + g

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() starts from a scalar loss")
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"


def _result(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def add(x: Tensor, y: Tensor) -> Tensor:
    if x.data.shape != y.data.shape:
        raise ShapeError(f"add shapes differ: {x.data.shape} vs {y.data.shape}")

    def backward(g):
        if x.requires_grad:
            x.accumulate(g)
        if y.requires_grad:
            y.accumulate(g)

    return _result(x.data + y.data, (x, y), backward)


def relu(x: Tensor) -> Tensor:
    out_data = np.maximum(x.data, 0)

    def backward(g):
        if x.requires_grad:
            x.accumulate(g * (out_data > 0))

    return _result(out_data, (x,), backward)


def _im2col(xp, kh, kw, stride, out_h, out_w):
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, out_h, out_w), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride]
    return cols.reshape(n, c * kh * kw, out_h * out_w)


def _col2im(dcols, n, c, ph, pw, kh, kw, stride, out_h, out_w):
    dxp = np.zeros((n, c, ph, pw), dtype=dcols.dtype)
    dcols = dcols.reshape(n, c, kh, kw, out_h, out_w)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride] += dcols[:, :, i, j]
    return dxp


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation convolution over NCHW input, 3x3 or 1x1 kernels.

    bias may be None (the usual choice when a norm layer follows, where a
    bias would cancel exactly and carry no gradient signal).
    """
    if x.data.ndim != 4:
        raise ShapeError(f"conv2d input must be NCHW, got {x.data.shape}")
    n, c, h, w = x.data.shape
    o, c2, kh, kw = weight.data.shape
    if c2 != c:
        raise ShapeError(f"conv2d channels {c} != weight in-channels {c2}")
    if (kh, kw) not in ((3, 3), (1, 1)):
        raise ShapeError(f"conv2d supports 3x3 or 1x1 kernels, got {kh}x{kw}")
    if bias is not None and bias.data.shape != (o,):
        raise ShapeError(f"conv2d bias must be ({o},), got {bias.data.shape}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    ph, pw = xp.shape[2:]
    out_h = (ph - kh) // stride + 1
    out_w = (pw - kw) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"conv2d output would be empty for input {x.data.shape}")
    cols = _im2col(xp, kh, kw, stride, out_h, out_w)
    w2 = weight.data.reshape(o, -1)
    out = np.matmul(w2, cols)
    if bias is not None:
        out += bias.data.reshape(1, o, 1)

    def backward(g):
        g2 = np.ascontiguousarray(g.reshape(n, o, -1))
        if weight.requires_grad:
            dw = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0)
            weight.accumulate(dw.reshape(weight.data.shape))
        if bias is not None and bias.requires_grad:
            bias.accumulate(g2.sum(axis=(0, 2)))
        if x.requires_grad:
            dcols = np.matmul(w2.T, g2)
            dxp = _col2im(dcols, n, c, ph, pw, kh, kw, stride, out_h, out_w)
            x.accumulate(dxp[:, :, padding : ph - padding, padding : pw - padding] if padding else dxp)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _result(out.reshape(n, o, out_h, out_w), parents, backward)


def avg_pool2x2(x: Tensor) -> Tensor:
    n, c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2x2 needs even spatial dims, got {h}x{w}")
    out = x.data.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def backward(g):
        if x.requires_grad:
            x.accumulate(np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * np.asarray(0.25, dtype=g.dtype))

    return _result(out, (x,), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """Spatial mean per channel: (N, C, H, W) -> (N, C)."""
    n, c, h, w = x.data.shape
    out = x.data.mean(axis=(2, 3))

    def backward(g):
        if x.requires_grad:
            scale = np.asarray(1.0 / (h * w), dtype=g.dtype)
            x.accumulate(np.broadcast_to((g * scale)[:, :, None, None], x.data.shape).copy())

    return _result(out, (x,), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.data.shape[1] != weight.data.shape[1]:
        raise ShapeError(f"linear shapes mismatch: x {x.data.shape}, weight {weight.data.shape}")
    out = x.data @ weight.data.T + bias.data

    def backward(g):
        if x.requires_grad:
            x.accumulate(g @ weight.data)
        if weight.requires_grad:
            weight.accumulate(g.T @ x.data)
        if bias.requires_grad:
            bias.accumulate(g.sum(axis=0))

    return _result(out, (x, weight, bias), backward)


def batch_norm2d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    momentum: float = 0.9,
    eps: float = 1e-5,
    training: bool = True,
) -> Tensor:
    """Per-channel normalization: batch statistics while training (with the
    running buffers updated in place), running statistics at inference."""
    n, c, h, w = x.data.shape
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ShapeError(f"batch_norm2d affine params must be ({c},)")
    if training:
        mu = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mu = running_mean.astype(x.data.dtype, copy=False)
        var = running_var.astype(x.data.dtype, copy=False)
    inv = (1.0 / np.sqrt(var + eps)).astype(x.data.dtype)
    xhat = (x.data - mu.reshape(1, c, 1, 1).astype(x.data.dtype)) * inv.reshape(1, c, 1, 1)
    out = gamma.data.reshape(1, c, 1, 1) * xhat + beta.data.reshape(1, c, 1, 1)

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate((g * xhat).sum(axis=(0, 2, 3)))
        if beta.requires_grad:
            beta.accumulate(g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            gi = g * gamma.data.reshape(1, c, 1, 1)
            if training:
                m = n * h * w
                s1 = gi.sum(axis=(0, 2, 3), keepdims=True)
                s2 = (gi * xhat).sum(axis=(0, 2, 3), keepdims=True)
                dx = (gi - s1 / m - xhat * (s2 / m)) * inv.reshape(1, c, 1, 1)
            else:
                dx = gi * inv.reshape(1, c, 1, 1)
            x.accumulate(dx)

    return _result(out, (x, gamma, beta), backward)


def softmax(z: Tensor) -> Tensor:
    """Row-wise softmax with max-subtraction for stability."""
    m = z.data.max(axis=-1, keepdims=True)
    e = np.exp(z.data - m)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        if z.requires_grad:
            dot = (g * y).sum(axis=-1, keepdims=True)
            z.accumulate((g - dot) * y)

    return _result(y, (z,), backward)


def _check_one_hot(y: np.ndarray):
    if not np.all((y == 0) | (y == 1)) or not np.allclose(y.sum(axis=-1), 1.0):
        raise ValueError("labels must be one-hot encoded")


LOG_FLOOR = 1e-12


def cross_entropy(y_hat: Tensor, y: np.ndarray) -> Tensor:
    """Categorical cross-entropy against a one-hot target; batch mean for
    2-D inputs. The log is floored at 1e-12."""
    y = np.asarray(y)
    if y.shape != y_hat.data.shape:
        raise ShapeError(f"target shape {y.shape} != prediction shape {y_hat.data.shape}")
    _check_one_hot(y)
    n = y_hat.data.shape[0] if y_hat.data.ndim == 2 else 1
    clipped = np.maximum(y_hat.data, LOG_FLOOR)
    loss = -(y * np.log(clipped)).sum() / n

    def backward(g):
        if y_hat.requires_grad:
            mask = y_hat.data > LOG_FLOOR
            y_hat.accumulate(g * (-(y / clipped) * mask) / n)

    return _result(np.asarray(loss, dtype=y_hat.data.dtype), (y_hat,), backward)


def softmax_cross_entropy(z: Tensor, y: np.ndarray) -> Tensor:
    """Fused softmax + cross-entropy; gradient w.r.t. z is (softmax(z) - y)/n."""
    y = np.asarray(y, dtype=z.data.dtype)
    if y.shape != z.data.shape:
        raise ShapeError(f"target shape {y.shape} != logits shape {z.data.shape}")
    _check_one_hot(y)
    m = z.data.max(axis=-1, keepdims=True)
    e = np.exp(z.data - m)
    p = e / e.sum(axis=-1, keepdims=True)
    n = z.data.shape[0] if z.data.ndim == 2 else 1
    loss = -(y * np.log(np.maximum(p, LOG_FLOOR))).sum() / n

    def backward(g):
        if z.requires_grad:
            z.accumulate(g * (p - y) / n)

    return _result(np.asarray(loss, dtype=z.data.dtype), (z,), backward)
