"""Central finite-difference gradient verification for the autodiff ops."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def gradcheck(build, tensors, eps: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    `build` re-evaluates the scalar loss from the current contents of
    `tensors` (all float64, requires_grad=True). Relative error per tensor is
    max|analytic - numeric| / max(max|numeric|, 1e-8).
    """
    for t in tensors:
        t.zero_grad()
    loss = build()
    loss.backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    worst = 0.0
    for t, ana in zip(tensors, analytic):
        numeric = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(build().data)
            flat[i] = orig - eps
            down = float(build().data)
            flat[i] = orig
            num_flat[i] = (up - down) / (2.0 * eps)
        scale = max(float(np.abs(numeric).max()), 1e-8)
        err = float(np.abs(ana - numeric).max()) / scale
        worst = max(worst, err)
    return worst


def project(t: Tensor, weights: np.ndarray) -> Tensor:
    """Fixed-weight scalar projection so non-scalar op outputs can feed
    backward(); gradient of the projection is the weight array itself."""
    out = Tensor(np.asarray((t.data * weights).sum()))
    if t.requires_grad:
        out.requires_grad = True
        out._parents = (t,)
        out._backward = lambda g: t.accumulate(g * weights)
    return out


def make_inputs(rng, *shapes, away_from_zero: float = 0.0) -> list[Tensor]:
    """Random float64 leaf tensors; optionally push values away from relu
    kinks so central differences stay two-sided."""
    out = []
    for shape in shapes:
        data = rng.standard_normal(shape)
        if away_from_zero:
            data = data + away_from_zero * np.sign(data)
        out.append(Tensor(data.astype(np.float64), requires_grad=True))
    return out
