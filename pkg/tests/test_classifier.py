import numpy as np
import pytest

from spectator import classifier as cl


def test_dither_set_shapes_and_noise():
    F = np.array([[0.1, 0.2, 0.3], [-0.5, 0.0, 0.5]])
    X, Y, labels = cl.build_dither_set(F, cl.DitherConfig(R=5000, std=0.05, seed=1))
    assert X.shape == (10000, 3) and Y.shape == (10000, 2)
    assert np.array_equal(labels[:5000], np.zeros(5000)) and np.all(Y.sum(axis=1) == 1)
    resid = X - F[labels]
    assert resid.std() == pytest.approx(0.05, rel=0.02)
    assert np.abs(resid.mean(axis=0)).max() < 0.003
    X0, _, _ = cl.build_dither_set(F, cl.DitherConfig(R=3, std=0.0))
    assert np.array_equal(X0, F[[0, 0, 0, 1, 1, 1]])


def test_dither_validation():
    with pytest.raises(ValueError):
        cl.DitherConfig(R=0)
    with pytest.raises(ValueError):
        cl.DitherConfig(std=-1)
    with pytest.raises(ValueError):
        cl.build_dither_set([[0.0, 1.0]], cl.DitherConfig(R=2))


def test_architecture():
    clf = cl.MlpClassifier.initialize(3, 5, np.random.default_rng(0))
    assert [W.shape for W in clf.weights] == [(3, 5), (5, 15), (15, 5)]
    P = clf.predict_proba(np.zeros((4, 3)))
    assert np.allclose(P.sum(axis=1), 1)
    with pytest.raises(ValueError):
        clf.predict_proba(np.zeros(4))


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    clf = cl.MlpClassifier.initialize(3, 4, rng)
    for b in clf.biases:
        b[:] = rng.normal(scale=0.3, size=b.shape)
    X = rng.normal(size=(7, 3))
    Y = np.eye(4)[rng.integers(0, 4, 7)]
    _, g = clf.loss_and_grads(X, Y)
    h = 1e-6
    for name, p in clf.params.items():
        for idx in [tuple(rng.integers(0, s) for s in p.shape) for _ in range(3)]:
            old = p[idx]
            p[idx] = old + h
            up = clf.loss_and_grads(X, Y)[0]
            p[idx] = old - h
            down = clf.loss_and_grads(X, Y)[0]
            p[idx] = old
            fd = (up - down) / (2 * h)
            assert abs(fd - g[name][idx]) <= 1e-6 * max(abs(fd), 1e-4), name


def test_separable_classes_are_learned():
    F = np.array([[0.8, 0.0, -0.2], [0.2, 0.5, 0.1], [-0.6, -0.3, 0.4]])
    X, Y, labels = cl.build_dither_set(F, cl.DitherConfig(R=300, std=0.05, seed=2))
    clf, h = cl.train_classifier(X, Y, iterations=300, learning_rate=0.02, seed=3,
                                 class_names=["a", "b", "c"])
    assert h["test_accuracy"] > 0.99
    assert h["train"][-1] < h["train"][0]
    assert clf.labels == ["a", "b", "c"]
    assert cl.predict(clf, F[1], np.random.default_rng(0))[0] == 1
    clf2, _ = cl.train_classifier(X, Y, iterations=300, learning_rate=0.02, seed=3)
    assert all(np.array_equal(a, b) for a, b in zip(clf.weights, clf2.weights))


def test_choose_label_ties():
    assert cl.choose_label([0.1, 0.7, 0.2], 0.99) == 1
    assert cl.choose_label([0.5, 0.0, 0.5], 0.2) == 0
    assert cl.choose_label([0.5, 0.0, 0.5], 0.7) == 2


def test_random_tie_break_is_uniform():
    class Flat:
        def predict_proba(self, x):
            return np.full(4, 0.25)

    rng = np.random.default_rng(4)
    picks = np.bincount([cl.predict(Flat(), [0.0], rng)[0] for _ in range(8000)], minlength=4)
    assert np.all(np.abs(picks / 8000 - 0.25) < 0.02)


def test_training_errors():
    X = np.zeros((10, 3))
    with pytest.raises(ValueError):
        cl.train_classifier(X, np.eye(2)[np.zeros(10, int)])
    X[0, 0] = np.nan
    with pytest.raises(cl.ClassifierDiverged):
        cl.train_classifier(X, np.eye(2)[np.arange(10) % 2], iterations=2, split=0.0)
