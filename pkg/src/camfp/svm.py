"""Multi-class RBF-kernel SVM trained with SMO (one-vs-one, majority vote).

Features are z-score standardized with statistics fitted on the training
set only; the auto kernel width is gamma = 1 / (dim * var(standardized)).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import cftensor
from .errors import DataError, ShapeError


@dataclass(frozen=True)
class BinarySvm:
    """One pairwise classifier: positive class first, negative second."""

    class_pos: str
    class_neg: str
    support_vectors: np.ndarray  # (n_sv, dim), standardized space
    dual_coef: np.ndarray        # alpha_i * y_i
    alphas: np.ndarray           # raw alpha_i (kept for feasibility audits)
    labels: np.ndarray           # y_i in {+1, -1}
    bias: float


@dataclass(frozen=True)
class SvmModel:
    classes: list[str]
    C: float
    gamma: float
    mean: np.ndarray
    std: np.ndarray
    binaries: list[BinarySvm]

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"rbf_kernel dims differ: {a.shape} vs {b.shape}")
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    d = a - b
    return float(np.exp(-gamma * (d @ d)))


def _rbf_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    aa = (A * A).sum(axis=1)[:, None]
    bb = (B * B).sum(axis=1)[None, :]
    sq = np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * sq)


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_passes: int, rng) -> tuple[np.ndarray, float]:
    """Platt-style sequential minimal optimization on a precomputed kernel.

    Stops after max_passes consecutive full sweeps without an update; the
    decision cache f = K @ (alpha*y) + b is maintained incrementally.
    """
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0
    f = np.zeros(n)
    quiet_passes = 0
    sweeps = 0
    hard_cap = 250 * max(1, max_passes)
    while quiet_passes < max_passes and sweeps < hard_cap:
        changed = 0
        for i in range(n):
            ei = f[i] - y[i]
            if not ((y[i] * ei < -tol and alpha[i] < C) or (y[i] * ei > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            ej = f[j] - y[j]
            ai_old, aj_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                lo, hi = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
            else:
                lo, hi = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
            if lo >= hi:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                continue
            aj = np.clip(aj_old - y[j] * (ei - ej) / eta, lo, hi)
            if abs(aj - aj_old) < 1e-7:
                continue
            ai = ai_old + y[i] * y[j] * (aj_old - aj)
            b1 = b - ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
            b2 = b - ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
            if 0.0 < ai < C:
                b_new = b1
            elif 0.0 < aj < C:
                b_new = b2
            else:
                b_new = 0.5 * (b1 + b2)
            f += (ai - ai_old) * y[i] * K[:, i] + (aj - aj_old) * y[j] * K[:, j] + (b_new - b)
            alpha[i], alpha[j] = ai, aj
            b = b_new
            changed += 1
        quiet_passes = quiet_passes + 1 if changed == 0 else 0
        sweeps += 1
    return alpha, b


def svm_train(
    X: np.ndarray,
    labels,
    C: float = 10.0,
    gamma: float | str = "auto",
    tol: float = 1e-3,
    max_passes: int = 10,
    seed: int = 0,
) -> SvmModel:
    """Train one-vs-one RBF SVMs over feature vectors.

    gamma='auto' resolves to 1/(dim * variance of the standardized features).
    Deterministic for a fixed seed (used for SMO pair selection).
    """
    X = np.asarray(X, dtype=np.float64)
    labels = [str(l) for l in labels]
    if X.ndim != 2 or len(labels) != X.shape[0]:
        raise ShapeError(f"need (n, dim) features with one label per row, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")

    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), 1e-8)
    Z = (X - mean) / std
    if gamma == "auto":
        gamma_val = 1.0 / (Z.shape[1] * max(Z.var(), 1e-12))
    else:
        gamma_val = float(gamma)
        if gamma_val <= 0:
            raise ValueError(f"gamma must be > 0, got {gamma_val}")

    y_arr = np.asarray(labels)
    binaries = []
    for a_idx in range(len(classes)):
        for b_idx in range(a_idx + 1, len(classes)):
            ca, cb = classes[a_idx], classes[b_idx]
            mask = (y_arr == ca) | (y_arr == cb)
            Zs = Z[mask]
            ys = np.where(y_arr[mask] == ca, 1.0, -1.0)
            K = _rbf_matrix(Zs, Zs, gamma_val)
            rng = np.random.default_rng([seed, a_idx, b_idx])
            alpha, bias = _smo(K, ys, C, tol, max_passes, rng)
            sv = alpha > 1e-10
            binaries.append(
                BinarySvm(
                    class_pos=ca,
                    class_neg=cb,
                    support_vectors=Zs[sv].copy(),
                    dual_coef=(alpha * ys)[sv].copy(),
                    alphas=alpha[sv].copy(),
                    labels=ys[sv].copy(),
                    bias=float(bias),
                )
            )
    return SvmModel(classes, float(C), float(gamma_val), mean, std, binaries)


def decision_value(binary: BinarySvm, z: np.ndarray, gamma: float) -> float:
    """Sum alpha_i y_i k(x_i, z) + b in standardized feature space."""
    if binary.support_vectors.shape[0] == 0:
        return binary.bias
    k = _rbf_matrix(binary.support_vectors, z[None, :], gamma)[:, 0]
    return float(binary.dual_coef @ k + binary.bias)


def svm_predict(model: SvmModel, feature: np.ndarray) -> tuple[str, dict[str, int]]:
    """Majority vote over the pairwise models.

    Ties break by the largest summed absolute decision margin among tied
    classes, then by the smallest class index.
    """
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != model.mean.shape:
        raise ShapeError(f"feature dim {feature.shape} != model dim {model.mean.shape}")
    z = (feature - model.mean) / model.std
    votes = {c: 0 for c in model.classes}
    margin = {c: 0.0 for c in model.classes}
    for binary in model.binaries:
        val = decision_value(binary, z, model.gamma)
        winner = binary.class_pos if val >= 0 else binary.class_neg
        votes[winner] += 1
        margin[binary.class_pos] += abs(val)
        margin[binary.class_neg] += abs(val)
    best = max(votes.values())
    tied = [c for c in model.classes if votes[c] == best]
    if len(tied) > 1:
        top = max(margin[c] for c in tied)
        tied = [c for c in tied if margin[c] == top]
    return tied[0], votes


def svm_predict_batch(model: SvmModel, features: np.ndarray) -> list[str]:
    """Vectorized prediction for (n, dim) features."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.dim:
        raise ShapeError(f"features must be (n, {model.dim}), got {features.shape}")
    Z = (features - model.mean) / model.std
    n = Z.shape[0]
    votes = np.zeros((n, len(model.classes)), dtype=np.int64)
    margins = np.zeros((n, len(model.classes)))
    class_idx = {c: i for i, c in enumerate(model.classes)}
    for binary in model.binaries:
        if binary.support_vectors.shape[0]:
            k = _rbf_matrix(Z, binary.support_vectors, model.gamma)
            vals = k @ binary.dual_coef + binary.bias
        else:
            vals = np.full(n, binary.bias)
        pos, neg = class_idx[binary.class_pos], class_idx[binary.class_neg]
        votes[vals >= 0, pos] += 1
        votes[vals < 0, neg] += 1
        margins[:, pos] += np.abs(vals)
        margins[:, neg] += np.abs(vals)
    out = []
    for i in range(n):
        best = votes[i].max()
        tied = np.flatnonzero(votes[i] == best)
        if len(tied) > 1:
            tied = tied[margins[i, tied] == margins[i, tied].max()]
        out.append(model.classes[int(tied[0])])
    return out


def dual_feasibility(model: SvmModel, atol: float = 1e-6) -> bool:
    """0 <= alpha <= C and sum(alpha*y) == 0 for every binary model."""
    for binary in model.binaries:
        if np.any(binary.alphas < -atol) or np.any(binary.alphas > model.C + atol):
            return False
        if abs(float((binary.alphas * binary.labels).sum())) > atol:
            return False
    return True


def save_svm(model: SvmModel, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    header = {
        "classes": model.classes,
        "C": model.C,
        "gamma": model.gamma,
        "pairs": [[b.class_pos, b.class_neg, float(b.bias)] for b in model.binaries],
    }
    with open(os.path.join(out_dir, "model.json"), "w") as fh:
        json.dump(header, fh, sort_keys=True)
        fh.write("\n")
    cftensor.write_tensor(os.path.join(out_dir, "standardize_mean.cft"), model.mean)
    cftensor.write_tensor(os.path.join(out_dir, "standardize_std.cft"), model.std)
    for i, b in enumerate(model.binaries):
        cftensor.write_tensor(os.path.join(out_dir, f"sv_{i:03d}.cft"), b.support_vectors)
        cftensor.write_tensor(os.path.join(out_dir, f"coef_{i:03d}.cft"), b.dual_coef)
        cftensor.write_tensor(os.path.join(out_dir, f"alpha_{i:03d}.cft"), b.alphas)
        cftensor.write_tensor(os.path.join(out_dir, f"labels_{i:03d}.cft"), b.labels)


def load_svm(out_dir) -> SvmModel:
    with open(os.path.join(out_dir, "model.json")) as fh:
        header = json.load(fh)
    mean = cftensor.read_tensor(os.path.join(out_dir, "standardize_mean.cft"))
    std = cftensor.read_tensor(os.path.join(out_dir, "standardize_std.cft"))
    binaries = []
    for i, (pos, neg, bias) in enumerate(header["pairs"]):
        binaries.append(
            BinarySvm(
                class_pos=pos,
                class_neg=neg,
                support_vectors=cftensor.read_tensor(os.path.join(out_dir, f"sv_{i:03d}.cft")),
                dual_coef=cftensor.read_tensor(os.path.join(out_dir, f"coef_{i:03d}.cft")),
                alphas=cftensor.read_tensor(os.path.join(out_dir, f"alpha_{i:03d}.cft")),
                labels=cftensor.read_tensor(os.path.join(out_dir, f"labels_{i:03d}.cft")),
                bias=float(bias),
            )
        )
    return SvmModel(header["classes"], header["C"], header["gamma"], mean, std, binaries)
