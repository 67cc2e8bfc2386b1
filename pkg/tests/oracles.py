"""Independent brute-force oracles shared by module tests and acceptance."""

import itertools

import numpy as np


def brute_force_pce(a, b, radius=5):
    """Cyclic-correlation PCE via explicit rolls (no FFT)."""
    m, n = a.shape
    rho = np.empty((m, n))
    for dr in range(m):
        for dc in range(n):
            rho[dr, dc] = (np.roll(b, (dr, dc), axis=(0, 1)) * a).sum()
    peak_idx = np.unravel_index(np.argmax(np.abs(rho)), rho.shape)
    peak = rho[peak_idx]
    drr = np.abs(np.arange(m) - peak_idx[0])
    dcc = np.abs(np.arange(n) - peak_idx[1])
    mask = np.outer(np.minimum(drr, m - drr) <= radius, np.minimum(dcc, n - dcc) <= radius)
    energy = (rho * rho)[~mask].sum() / (m * n - mask.sum())
    return float(peak * peak / energy), tuple(int(v) for v in peak_idx)


def brute_force_dual_decisions(Z, ys, C, gamma, grid_n=11):
    """SVM dual grid search; the last alpha is solved from the constraint."""
    from camfp.svm import _rbf_matrix

    n = len(ys)
    K = _rbf_matrix(Z, Z, gamma)
    Q = K * np.outer(ys, ys)
    grid = np.linspace(0.0, C, grid_n)
    best_obj, best_alpha = -np.inf, None
    for combo in itertools.product(grid, repeat=n - 1):
        head = np.asarray(combo)
        tail = -(head @ ys[: n - 1]) * ys[n - 1]
        if tail < -1e-9 or tail > C + 1e-9:
            continue
        alpha = np.append(head, min(max(tail, 0.0), C))
        obj = alpha.sum() - 0.5 * alpha @ Q @ alpha
        if obj > best_obj:
            best_obj, best_alpha = obj, alpha
    raw = (best_alpha * ys) @ K
    free = (best_alpha > 1e-8) & (best_alpha < C - 1e-8)
    bias = np.mean(ys[free] - raw[free]) if free.any() else np.mean(ys - raw)
    return raw + bias
