"""Layer modules over the autodiff ops: parameter registry, conv, batch
norm, linear, and the residual block."""

from __future__ import annotations

import numpy as np

from . import tensor as ops
from .tensor import Tensor


class Module:
    """Parameter/submodule registry with a train/eval flag."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name, array: np.ndarray):
        self._buffers[name] = array
        object.__setattr__(self, name, array)

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def named_parameters(self, prefix: str = ""):
        for name, t in self._params.items():
            yield prefix + name, t
        for name, mod in self._modules.items():
            yield from mod.named_parameters(prefix + name + ".")

    def named_buffers(self, prefix: str = ""):
        for name, arr in self._buffers.items():
            yield prefix + name, arr
        for name, mod in self._modules.items():
            yield from mod.named_buffers(prefix + name + ".")

    def train(self, mode: bool = True):
        object.__setattr__(self, "training", mode)
        for mod in self._modules.values():
            mod.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)


class Conv2d(Module):
    """3x3 or 1x1 convolution with fan-in-scaled Gaussian init."""

    def __init__(self, in_ch, out_ch, kernel, stride=1, padding=None, rng=None, dtype=np.float32, bias=True):
        super().__init__()
        self.stride = stride
        self.padding = kernel // 2 if padding is None else padding
        rng = rng or np.random.default_rng(0)
        std = np.sqrt(2.0 / (in_ch * kernel * kernel))
        self.weight = Tensor(
            (rng.standard_normal((out_ch, in_ch, kernel, kernel)) * std).astype(dtype),
            requires_grad=True,
        )
        # A norm layer right after the conv would cancel a bias exactly.
        self.bias = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True) if bias else None

    def forward(self, x):
        return ops.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm2d(Module):
    """Running-statistics normalization, momentum 0.9; inference output is
    independent of batch composition."""

    def __init__(self, channels, momentum=0.9, eps=1e-5, dtype=np.float32):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)
        self.register_buffer("running_mean", np.zeros(channels, dtype=np.float64))
        self.register_buffer("running_var", np.ones(channels, dtype=np.float64))

    def forward(self, x):
        return ops.batch_norm2d(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            self.momentum, self.eps, training=self.training,
        )


class Linear(Module):
    def __init__(self, in_dim, out_dim, rng=None, dtype=np.float32):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        std = np.sqrt(2.0 / in_dim)
        self.weight = Tensor((rng.standard_normal((out_dim, in_dim)) * std).astype(dtype), requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim, dtype=dtype), requires_grad=True)

    def forward(self, x):
        return ops.linear(x, self.weight, self.bias)


class ResidualBlock(Module):
    """conv-norm-relu-conv-norm plus shortcut, relu after the sum.

    The shortcut is the identity when shapes match and a stride-matched 1x1
    projection (with its own norm) otherwise.
    """

    def __init__(self, in_ch, out_ch, stride=1, rng=None, dtype=np.float32):
        super().__init__()
        self.conv1 = Conv2d(in_ch, out_ch, 3, stride=stride, rng=rng, dtype=dtype, bias=False)
        self.bn1 = BatchNorm2d(out_ch, dtype=dtype)
        self.conv2 = Conv2d(out_ch, out_ch, 3, stride=1, rng=rng, dtype=dtype, bias=False)
        self.bn2 = BatchNorm2d(out_ch, dtype=dtype)
        self.has_projection = stride != 1 or in_ch != out_ch
        if self.has_projection:
            self.proj = Conv2d(in_ch, out_ch, 1, stride=stride, padding=0, rng=rng, dtype=dtype, bias=False)
            self.proj_bn = BatchNorm2d(out_ch, dtype=dtype)

    def forward(self, x):
        out = ops.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        shortcut = self.proj_bn(self.proj(x)) if self.has_projection else x
        return ops.relu(ops.add(out, shortcut))
