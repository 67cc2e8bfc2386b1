"""Classification metrics and the 2-D feature embedding export."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class EvalReport:
    accuracy: float                 # percent
    classes: list[str]
    confusion: np.ndarray           # row-normalized, rows = true class
    per_class_accuracy: dict[str, float]
    support: dict[str, int]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "classes": list(self.classes),
            "confusion": [[float(v) for v in row] for row in self.confusion],
            "per_class_accuracy": dict(self.per_class_accuracy),
            "support": dict(self.support),
            "metadata": self.metadata,
        }


def evaluate(pairs, classes=None, metadata=None) -> EvalReport:
    """Accuracy and row-normalized confusion from (true, predicted) pairs."""
    pairs = [(str(t), str(p)) for t, p in pairs]
    if not pairs:
        raise ValueError("evaluate needs at least one (true, predicted) pair")
    if classes is None:
        classes = sorted({t for t, _ in pairs} | {p for _, p in pairs})
    classes = [str(c) for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    for t, p in pairs:
        if t not in index or p not in index:
            raise DataError(f"label outside class list: ({t}, {p})")
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in pairs:
        counts[index[t], index[p]] += 1
    support = counts.sum(axis=1)
    if np.any(support == 0):
        missing = [c for c, s in zip(classes, support) if s == 0]
        raise DataError(f"no test samples for classes {missing}; confusion rows would not sum to 1")
    confusion = counts / support[:, None]
    correct = int(np.trace(counts))
    accuracy = 100.0 * correct / len(pairs)
    per_class = {c: float(100.0 * counts[i, i] / support[i]) for i, c in enumerate(classes)}
    return EvalReport(
        accuracy=float(accuracy),
        classes=classes,
        confusion=confusion,
        per_class_accuracy=per_class,
        support={c: int(s) for c, s in zip(classes, support)},
        metadata=metadata or {},
    )


def majority_vote(group_pairs) -> list[tuple[str, str]]:
    """Aggregate patch-level (group_id, true, predicted) to one prediction
    per group by vote count, ties broken by smallest label."""
    groups: dict[str, tuple[str, dict[str, int]]] = {}
    for gid, true, pred in group_pairs:
        true_label, tally = groups.setdefault(str(gid), (str(true), {}))
        if true_label != str(true):
            raise DataError(f"group {gid} has conflicting true labels")
        tally[str(pred)] = tally.get(str(pred), 0) + 1
    out = []
    for gid in sorted(groups):
        true_label, tally = groups[gid]
        best = max(tally.values())
        winner = sorted(c for c, v in tally.items() if v == best)[0]
        out.append((true_label, winner))
    return out


def pca_embed(features: np.ndarray, dims: int = 2) -> tuple[np.ndarray, bool]:
    """Project centered features onto the top principal directions.

    Sign convention: each component's largest-magnitude coordinate is
    positive. Degenerate (all-identical) input returns zeros with the
    warning flag set.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"features must be (n, dim), got {X.shape}")
    n, d = X.shape
    if n < dims + 1:
        raise ValueError(f"need at least {dims + 1} samples for a {dims}-D embedding, got {n}")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    if eigvals[0] <= 1e-18:
        return np.zeros((n, dims)), True
    comps = eigvecs[:, :dims]
    for j in range(dims):
        k = np.argmax(np.abs(comps[:, j]))
        if comps[k, j] < 0:
            comps[:, j] = -comps[:, j]
    return centered @ comps, False


def pca_spectrum(features: np.ndarray) -> np.ndarray:
    """Descending covariance eigenvalues (used by the reconstruction test)."""
    X = np.asarray(features, dtype=np.float64)
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (X.shape[0] - 1)
    return np.sort(np.linalg.eigvalsh(cov))[::-1]
