import itertools

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from camfp.errors import DataError, ShapeError
from camfp.svm import (
    _rbf_matrix,
    decision_value,
    dual_feasibility,
    load_svm,
    rbf_kernel,
    save_svm,
    svm_predict,
    svm_predict_batch,
    svm_train,
)

TOY_X = np.array([[0.0, 0.0], [0.0, 1.0], [5.0, 5.0], [5.0, 6.0]])
TOY_Y = ["A", "A", "B", "B"]


def test_rbf_self_is_one(rng):
    v = rng.standard_normal(8)
    assert rbf_kernel(v, v, 0.37) == 1.0


def test_rbf_closed_form():
    a = np.zeros(2)
    b = np.array([np.sqrt(np.log(2.0)), 0.0])
    assert rbf_kernel(a, b, 1.0) == pytest.approx(0.5, abs=1e-12)


@given(st.integers(0, 10_000))
def test_rbf_symmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(5), rng.standard_normal(5)
    assert rbf_kernel(a, b, 0.8) == pytest.approx(rbf_kernel(b, a, 0.8), abs=1e-12)


def test_rbf_validations():
    with pytest.raises(ShapeError):
        rbf_kernel(np.zeros(3), np.zeros(4), 1.0)
    with pytest.raises(ValueError):
        rbf_kernel(np.zeros(3), np.zeros(3), 0.0)


def test_toy_problem_matches_centroid_oracle():
    model = svm_train(TOY_X, TOY_Y, C=10.0)
    preds = [svm_predict(model, x)[0] for x in TOY_X]
    centroids = {"A": TOY_X[:2].mean(0), "B": TOY_X[2:].mean(0)}
    oracle = [min(centroids, key=lambda c: np.linalg.norm(x - centroids[c])) for x in TOY_X]
    assert preds == oracle == TOY_Y


def test_duplicating_samples_is_invariant(rng):
    model1 = svm_train(TOY_X, TOY_Y, C=10.0)
    model2 = svm_train(np.vstack([TOY_X, TOY_X]), TOY_Y * 2, C=10.0)
    grid = np.array([[a, b] for a in np.linspace(-1, 6, 8) for b in np.linspace(-1, 7, 8)])
    assert svm_predict_batch(model1, grid) == svm_predict_batch(model2, grid)


def test_scaling_invariance_with_refit():
    grid = np.array([[a, b] for a in np.linspace(-1, 6, 6) for b in np.linspace(-1, 7, 6)])
    base = svm_predict_batch(svm_train(TOY_X, TOY_Y), grid)
    scaled = svm_predict_batch(svm_train(TOY_X * 10.0, TOY_Y), grid * 10.0)
    assert base == scaled


def test_dual_feasibility_on_trained_models(rng):
    X = np.vstack([rng.normal(c, 0.4, (15, 3)) for c in ([0, 0, 0], [2, 0, 1], [0, 2, 2])])
    y = ["a"] * 15 + ["b"] * 15 + ["c"] * 15
    model = svm_train(X, y, C=5.0)
    assert dual_feasibility(model, atol=1e-6)
    for binary in model.binaries:
        assert np.all(binary.alphas >= -1e-9)
        assert np.all(binary.alphas <= 5.0 + 1e-9)
        assert abs((binary.alphas * binary.labels).sum()) < 1e-6


def test_binary_vote_is_single_decision():
    model = svm_train(TOY_X, TOY_Y)
    label, votes = svm_predict(model, np.array([0.2, 0.4]))
    assert label == "A"
    assert sum(votes.values()) == 1  # one pairwise model for D=2


def test_deterministic_training(rng):
    X = np.vstack([rng.normal(c, 0.5, (12, 4)) for c in ([0] * 4, [2] * 4, [4] * 4)])
    y = ["x"] * 12 + ["y"] * 12 + ["z"] * 12
    test = rng.normal(2, 2, (25, 4))
    p1 = svm_predict_batch(svm_train(X, y, seed=7), test)
    p2 = svm_predict_batch(svm_train(X, y, seed=7), test)
    assert p1 == p2


def test_order_independence(rng):
    X = np.vstack([rng.normal(c, 0.5, (10, 3)) for c in ([0, 0, 0], [3, 3, 3])])
    y = ["p"] * 10 + ["q"] * 10
    perm = rng.permutation(20)
    test = rng.normal(1.5, 1.5, (20, 3))
    p1 = svm_predict_batch(svm_train(X, y, seed=3), test)
    p2 = svm_predict_batch(svm_train(X[perm], [y[i] for i in perm], seed=3), test)
    assert p1 == p2


def test_single_class_rejected():
    with pytest.raises(ValueError):
        svm_train(np.zeros((4, 2)), ["same"] * 4)


def test_non_finite_features_rejected():
    X = TOY_X.copy()
    X[0, 0] = np.nan
    with pytest.raises(DataError):
        svm_train(X, TOY_Y)


def test_dimension_mismatch_predict():
    model = svm_train(TOY_X, TOY_Y)
    with pytest.raises(ShapeError):
        svm_predict(model, np.zeros(5))


from oracles import brute_force_dual_decisions


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_smo_agrees_with_brute_force_dual(seed):
    rng = np.random.default_rng(seed)
    n_pos = 3 if seed % 2 == 0 else 2
    X = np.vstack([
        rng.normal(0.0, 0.6, (n_pos, 2)),
        rng.normal(3.0, 0.6, (5 - n_pos, 2)),
    ])
    y = ["m"] * n_pos + ["n"] * (5 - n_pos)
    model = svm_train(X, y, C=5.0, gamma=0.5)
    Z = (X - model.mean) / model.std
    ys = np.where(np.asarray(y) == "m", 1.0, -1.0)
    brute = brute_force_dual_decisions(Z, ys, 5.0, model.gamma)
    smo = np.array([decision_value(model.binaries[0], z, model.gamma) for z in Z])
    confident = np.abs(brute) > 1e-3
    assert np.all(np.sign(brute[confident]) == np.sign(smo[confident]))


def test_save_load_roundtrip(tmp_path, rng):
    X = np.vstack([rng.normal(c, 0.5, (8, 3)) for c in ([0, 0, 0], [2, 2, 2], [4, 0, 4])])
    y = ["a"] * 8 + ["b"] * 8 + ["c"] * 8
    model = svm_train(X, y, C=3.0, seed=1)
    save_svm(model, tmp_path / "svm")
    clone = load_svm(tmp_path / "svm")
    test = rng.normal(2, 2, (30, 3))
    assert svm_predict_batch(model, test) == svm_predict_batch(clone, test)
    assert clone.classes == model.classes and clone.gamma == pytest.approx(model.gamma)
