"""Small residual network with a GAP feature head ("MiniResNet").

Structure mirrors the standard residual classifier at desk scale: stride-2
stem conv + stride-2 average pool (224 -> 56), stages of residual blocks with
stride-2 transitions, global average pooling, and a fully connected layer to
the class scores. The GAP output is the learned device fingerprint vector.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .. import cftensor
from . import tensor as ops
from .layers import BatchNorm2d, Conv2d, Linear, Module, ResidualBlock
from .tensor import Tensor


@dataclass(frozen=True)
class MiniResNetConfig:
    num_classes: int
    stem_channels: int = 16
    stage_channels: tuple[int, ...] = (16, 32, 64)
    blocks_per_stage: int = 2

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.stem_channels < 1 or self.blocks_per_stage < 1 or not self.stage_channels:
            raise ValueError("channel and block counts must be >= 1")
        if any(c < 1 for c in self.stage_channels):
            raise ValueError(f"stage channels must be >= 1, got {self.stage_channels}")
        object.__setattr__(self, "stage_channels", tuple(self.stage_channels))

    @property
    def feature_dim(self) -> int:
        return self.stage_channels[-1]


class MiniResNet(Module):
    def __init__(self, cfg: MiniResNetConfig, seed: int = 0, dtype=np.float32):
        super().__init__()
        self.cfg = cfg
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.stem = Conv2d(3, cfg.stem_channels, 3, stride=2, rng=rng, dtype=dtype, bias=False)
        self.stem_bn = BatchNorm2d(cfg.stem_channels, dtype=dtype)
        self.blocks = []
        in_ch = cfg.stem_channels
        for si, ch in enumerate(cfg.stage_channels):
            for bi in range(cfg.blocks_per_stage):
                stride = 2 if (si > 0 and bi == 0) else 1
                block = ResidualBlock(in_ch, ch, stride=stride, rng=rng, dtype=dtype)
                setattr(self, f"stage{si}_block{bi}", block)
                self.blocks.append(block)
                in_ch = ch
        self.fc = Linear(cfg.stage_channels[-1], cfg.num_classes, rng=rng, dtype=dtype)

    def features(self, x: Tensor) -> Tensor:
        """Forward to the global-average-pool output (the fingerprint vector)."""
        out = ops.relu(self.stem_bn(self.stem(x)))
        out = ops.avg_pool2x2(out)
        for block in self.blocks:
            out = block(out)
        return ops.global_avg_pool(out)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc(self.features(x))


def _roles(name: str) -> str:
    leaf = name.rsplit(".", 1)[-1]
    return {
        "weight": "weight",
        "bias": "bias",
        "gamma": "norm_scale",
        "beta": "norm_shift",
        "running_mean": "running_mean",
        "running_var": "running_var",
    }.get(leaf, "param")


def save_model(model: MiniResNet, out_dir) -> None:
    """One CFTR file per parameter/buffer + JSON index + config JSON."""
    os.makedirs(out_dir, exist_ok=True)
    index = []
    entries = [(n, t.data) for n, t in model.named_parameters()]
    entries += [(n, arr) for n, arr in model.named_buffers()]
    for i, (name, arr) in enumerate(entries):
        fname = f"t{i:04d}.cft"
        cftensor.write_tensor(os.path.join(out_dir, fname), np.asarray(arr))
        index.append({"name": name, "shape": list(arr.shape), "role": _roles(name), "file": fname})
    with open(os.path.join(out_dir, "index.json"), "w") as fh:
        json.dump(index, fh, indent=1, sort_keys=True)
        fh.write("\n")
    cfg = asdict(model.cfg)
    cfg["stage_channels"] = list(model.cfg.stage_channels)
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump({"config": cfg, "seed": model.seed, "dtype": str(np.dtype(model.fc.weight.data.dtype))}, fh, sort_keys=True)
        fh.write("\n")


def load_model(out_dir) -> MiniResNet:
    with open(os.path.join(out_dir, "config.json")) as fh:
        meta = json.load(fh)
    cfg_d = dict(meta["config"])
    cfg_d["stage_channels"] = tuple(cfg_d["stage_channels"])
    model = MiniResNet(MiniResNetConfig(**cfg_d), seed=meta["seed"], dtype=np.dtype(meta["dtype"]))
    with open(os.path.join(out_dir, "index.json")) as fh:
        index = json.load(fh)
    params = dict(model.named_parameters())
    buffers = dict(model.named_buffers())
    for entry in index:
        arr = cftensor.read_tensor(os.path.join(out_dir, entry["file"]))
        if entry["name"] in params:
            target = params[entry["name"]].data
            target[...] = arr.astype(target.dtype)
        else:
            buffers[entry["name"]][...] = arr
    return model
