"""
Dithered training sets and the small MLP that maps measured features to a noise profile.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .adam import Adam
from .graybox import split_indices

log = logging.getLogger(__name__)


class ClassifierDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class DitherConfig:
    """``R`` noisy replicas per class with iid Gaussian noise of std ``std`` on each feature."""

    R: int = 10000
    std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if self.std < 0:
            raise ValueError("dither std must be non-negative")


def build_dither_set(class_features, cfg: DitherConfig):
    """
    Replicate each class feature vector ``R`` times and add Gaussian dither.

    Returns ``(X, Y, labels)``: features (N R, S), one-hot targets (N R, N) and
    integer labels, grouped by class.
    """
    F = np.atleast_2d(np.asarray(class_features, dtype=float))
    N, S = F.shape
    if N < 2:
        raise ValueError("need at least two classes")
    labels = np.repeat(np.arange(N), cfg.R)
    noise = np.random.default_rng(cfg.seed).normal(0.0, 1.0, size=(N * cfg.R, S))
    X = F[labels] + cfg.std * noise
    return X, np.eye(N)[labels], labels


def _softmax(z):
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(eq=False)
class MlpClassifier:
    """``S -> N -> 3N -> N`` network, tanh hidden layers and softmax output."""

    weights: list
    biases: list
    labels: list = field(default_factory=list)
    optimizer: Adam = field(default_factory=Adam)

    @classmethod
    def initialize(cls, n_features: int, n_classes: int, rng: np.random.Generator,
                   labels=None, learning_rate: float = 1e-2) -> "MlpClassifier":
        sizes = [n_features, n_classes, 3 * n_classes, n_classes]
        Ws, bs = [], []
        for a, b in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (a + b))
            Ws.append(rng.uniform(-limit, limit, size=(a, b)))
            bs.append(np.zeros(b))
        labels = list(labels) if labels is not None else [str(k) for k in range(n_classes)]
        return cls(Ws, bs, labels, Adam(lr=learning_rate))

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def params(self) -> dict:
        out = {}
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            out[f"W{k}"] = W
            out[f"b{k}"] = b
        return out

    def _forward(self, X):
        acts = [X]
        h = X
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = _softmax(z) if k == len(self.weights) - 1 else np.tanh(z)
            acts.append(h)
        return acts

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        P = self._forward(X)[-1]
        return P[0] if single else P

    def loss_and_grads(self, X, Y):
        acts = self._forward(X)
        P = acts[-1]
        diff = P - Y
        value = float(np.mean(diff ** 2))
        dP = 2.0 * diff / diff.size
        dz = P * (dP - np.sum(P * dP, axis=1, keepdims=True))
        grads = {}
        for k in range(len(self.weights) - 1, -1, -1):
            grads[f"W{k}"] = acts[k].T @ dz
            grads[f"b{k}"] = dz.sum(axis=0)
            if k:
                dz = (dz @ self.weights[k].T) * (1.0 - acts[k] ** 2)
        return value, grads


def choose_label(probs, u: float, tol: float = 0.0) -> int:
    """Argmax of ``probs``; exact ties (within ``tol``) resolved by the uniform draw ``u``."""
    probs = np.asarray(probs)
    top = np.flatnonzero(probs >= probs.max() - tol)
    return int(top[min(int(u * top.size), top.size - 1)])


def predict(clf, features, rng: np.random.Generator | None = None):
    """
    Label and probability vector for one feature vector.

    Works for any object with ``predict_proba``. Ties between maximal outputs
    are broken uniformly at random using ``rng``.
    """
    probs = np.asarray(clf.predict_proba(np.asarray(features, dtype=float)))
    rng = np.random.default_rng() if rng is None else rng
    return choose_label(probs, rng.random()), probs


def accuracy(clf, X, labels) -> float:
    return float(np.mean(np.argmax(clf.predict_proba(X), axis=1) == labels))


def train_classifier(X, Y, n_classes: int | None = None, split: float = 0.1, iterations: int = 500,
                     learning_rate: float = 1e-2, seed: int = 0, class_names=None):
    """
    Full-batch Adam on the MSE between softmax outputs and one-hot targets.

    Returns ``(classifier, history)``; history holds per-iteration train/test
    loss and the final held-out accuracy.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n_classes = Y.shape[1] if n_classes is None else n_classes
    labels = np.argmax(Y, axis=1)
    if np.unique(labels).size < 2:
        raise ValueError("need examples from at least two classes")
    tr, te = split_indices(X.shape[0], split, seed)
    clf = MlpClassifier.initialize(X.shape[1], n_classes, np.random.default_rng(seed),
                                   class_names, learning_rate)
    history = {"train": [], "test": []}
    for it in range(iterations):
        value, grads = clf.loss_and_grads(X[tr], Y[tr])
        test_value = float(np.mean((clf.predict_proba(X[te]) - Y[te]) ** 2)) if te.size else value
        if not (np.isfinite(value) and np.isfinite(test_value)):
            raise ClassifierDiverged(f"non-finite classifier loss at iteration {it}")
        history["train"].append(value)
        history["test"].append(test_value)
        clf.optimizer.step(clf.params, grads)
    history = {k: np.asarray(v) for k, v in history.items()}
    idx = te if te.size else tr
    history["test_accuracy"] = accuracy(clf, X[idx], labels[idx])
    log.info("classifier held-out accuracy %.4f", history["test_accuracy"])
    return clf, history
