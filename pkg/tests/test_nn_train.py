import numpy as np
import pytest

from camfp.errors import DataError
from camfp.nn import MiniResNet, MiniResNetConfig, TrainConfig, extract_features, train


class ArrayDataset:
    def __init__(self, xs, ys):
        self.xs, self.ys = xs, ys

    def __len__(self):
        return len(self.xs)

    def label(self, i):
        return self.ys[i]

    def __getitem__(self, i):
        return self.xs[i], self.ys[i]


def _toy_model(num_classes=2, seed=0):
    return MiniResNet(
        MiniResNetConfig(num_classes=num_classes, stem_channels=8, stage_channels=(8, 12), blocks_per_stage=1),
        seed=seed,
    )


def _class_stamped_dataset(rng, n_per_class=12, classes=2, size=32):
    """Learnable toy data: classes differ by global channel gains."""
    xs, ys = [], []
    for c in range(classes):
        gain = 1.0 + 0.25 * (c - 0.5)
        for _ in range(n_per_class):
            base = rng.random((3, size, size)).astype(np.float32) * 0.5 + 0.2
            xs.append(np.clip(base * gain, 0, 1).astype(np.float32))
            ys.append(c)
    return ArrayDataset(xs, ys)


def test_training_reduces_loss_on_learnable_data(rng):
    ds = _class_stamped_dataset(rng)
    model = _toy_model()
    losses = train(model, ds, TrainConfig(epochs=6, batch_size=8, seed=0))
    assert losses[-1] < losses[0]
    assert all(np.isfinite(v) for v in losses)
    # train accuracy after training
    correct = 0
    for i in range(len(ds)):
        x, y = ds[i]
        feats_logits = model  # predict via argmax logits
        from camfp.nn import Tensor

        model.eval()
        pred = int(np.argmax(model(Tensor(x[None].astype(np.float32))).data[0]))
        correct += pred == y
    assert correct / len(ds) >= 0.9


def test_identical_classes_stay_at_chance(rng):
    # D identical-image classes: loss hovers at ln(D).
    x = rng.random((3, 32, 32)).astype(np.float32)
    xs = [x.copy() for _ in range(24)]
    ys = [i % 3 for i in range(24)]
    model = _toy_model(num_classes=3, seed=1)
    losses = train(model, ArrayDataset(xs, ys), TrainConfig(epochs=4, batch_size=12, seed=0))
    assert abs(losses[-1] - np.log(3.0)) < 0.25


def test_training_deterministic(rng):
    ds = _class_stamped_dataset(rng, n_per_class=6)
    runs = []
    for _ in range(2):
        model = _toy_model(seed=5)
        losses = train(model, ds, TrainConfig(epochs=2, batch_size=8, seed=3))
        params = np.concatenate([p.data.ravel().copy() for p in model.parameters()])
        runs.append((losses, params))
    assert runs[0][0] == runs[1][0]
    np.testing.assert_array_equal(runs[0][1], runs[1][1])


def test_label_out_of_range_named(rng):
    xs = [rng.random((3, 32, 32)).astype(np.float32) for _ in range(4)]
    ds = ArrayDataset(xs, [0, 1, 5, 0])
    with pytest.raises(DataError) as err:
        train(_toy_model(), ds, TrainConfig(epochs=1, batch_size=2))
    assert "2" in str(err.value)  # offending row named


def test_empty_dataset_rejected():
    with pytest.raises(DataError):
        train(_toy_model(), ArrayDataset([], []), TrainConfig(epochs=1))


def test_features_are_batch_independent(rng):
    # Inference uses running statistics: a patch's features cannot depend on
    # what else is in the batch.
    from camfp.nn import extract_features_batch

    model = _toy_model(seed=2)
    ds = _class_stamped_dataset(rng, n_per_class=4)
    train(model, ds, TrainConfig(epochs=1, batch_size=4, seed=0))
    a = rng.random((3, 32, 32)).astype(np.float32)
    b = rng.random((3, 32, 32)).astype(np.float32)
    solo = extract_features(model, a)
    batched = extract_features_batch(model, np.stack([a, b]))[0]
    np.testing.assert_allclose(solo, batched, atol=1e-7)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
