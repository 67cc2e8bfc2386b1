"""Adam optimization and the training loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .model import MiniResNet
from .tensor import Tensor, softmax_cross_entropy


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 12
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


class AdamState:
    def __init__(self, params):
        self.m = [np.zeros_like(p.data if isinstance(p, Tensor) else p) for p in params]
        self.v = [np.zeros_like(x) for x in self.m]


def adam_step(params, grads, state: AdamState, t: int, cfg: TrainConfig):
    """Bias-corrected Adam update, in place on the parameter arrays."""
    if t < 1:
        raise ValueError(f"Adam step index must be >= 1, got {t}")
    b1, b2 = cfg.beta1, cfg.beta2
    correction = np.sqrt(1.0 - b2**t) / (1.0 - b1**t)
    for p, g, m, v in zip(params, grads, state.m, state.v):
        arr = p.data if isinstance(p, Tensor) else p
        if g.shape != arr.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {arr.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        arr -= (cfg.learning_rate * correction * m / (np.sqrt(v) + cfg.epsilon)).astype(arr.dtype)
    return params, state


def _one_hot(labels, num_classes, dtype):
    out = np.zeros((len(labels), num_classes), dtype=dtype)
    out[np.arange(len(labels)), labels] = 1
    return out


def train(model: MiniResNet, dataset, cfg: TrainConfig, progress=None) -> list[float]:
    """Seeded-shuffle mini-batch training; returns mean loss per epoch.

    `dataset` is any indexable of (CHW float array, int label); labels must
    lie in [0, num_classes).
    """
    n = len(dataset)
    if n == 0:
        raise DataError("training dataset is empty")
    num_classes = model.cfg.num_classes
    if hasattr(dataset, "label"):
        for i in range(n):
            lbl = dataset.label(i)
            if not 0 <= lbl < num_classes:
                raise DataError(f"dataset row {i}: label {lbl} outside [0, {num_classes})")
    rng = np.random.default_rng(cfg.seed)
    params = model.parameters()
    state = AdamState(params)
    dtype = model.fc.weight.data.dtype
    step = 0
    losses = []
    model.train()
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xs, ys = [], []
            for i in idx:
                x, y = dataset[int(i)]
                if not 0 <= y < num_classes:
                    raise DataError(f"dataset row {int(i)}: label {y} outside [0, {num_classes})")
                xs.append(np.asarray(x, dtype=dtype))
                ys.append(y)
            batch = Tensor(np.stack(xs))
            targets = _one_hot(ys, num_classes, dtype)
            logits = model(batch)
            loss = softmax_cross_entropy(logits, targets)
            value = float(loss.data)
            if not np.isfinite(value):
                raise DataError(f"non-finite loss at epoch {epoch}, step {step}")
            model.zero_grad()
            loss.backward()
            step += 1
            adam_step(params, [p.grad for p in params], state, step, cfg)
            total += value * len(idx)
            count += len(idx)
        losses.append(total / count)
        if progress is not None:
            progress(epoch, losses[-1])
    return losses


def extract_features_batch(model: MiniResNet, batch_chw: np.ndarray) -> np.ndarray:
    """GAP feature vectors for a (N, 3, H, W) batch, inference mode."""
    was_training = model.training
    model.eval()
    dtype = model.fc.weight.data.dtype
    out = model.features(Tensor(np.asarray(batch_chw, dtype=dtype))).data.copy()
    model.train(was_training)
    return out


def extract_features(model: MiniResNet, patch_chw: np.ndarray) -> np.ndarray:
    """GAP feature vector of one CHW patch (before the FC layer)."""
    return extract_features_batch(model, np.asarray(patch_chw)[None])[0]
