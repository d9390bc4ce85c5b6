"""
Graybox model of the spectator qubit for one noise profile.

The control path turns a pulse into ``U0``. The noise path holds ``K`` trainable
noise trajectories ``beta_k(t)`` and unconstrained weights ``w~_k`` whose
softmax mixes the frames ``U_k U0^dagger`` into an estimate of ``V_O``. The
output layer evaluates the expectations for every basis pair.

Training uses the equivalent Bloch-rotation form of the same computation,
``F_s = sum_k w_k (R_k n_s)_a``, whose gradient comes from the adjoint kernel
in :mod:`spectator.su2`.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from . import su2
from .adam import Adam
from .pulses import PulseSequence
from .simulator import (CharacterizationSet, MeasurementBasisSet, control_quaternions,
                        features_from_frames)

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


@dataclass(eq=False)
class GrayboxModel:
    T: float
    M: int
    omega: float
    basis: MeasurementBasisSet
    w_tilde: np.ndarray
    beta_hat: np.ndarray
    optimizer: Adam = field(default_factory=Adam)
    iteration: int = 0
    profile: str = ""

    @classmethod
    def initialize(cls, T: float, M: int, omega: float, basis: MeasurementBasisSet,
                   n_realizations: int = 32, init_std: float | None = None,
                   rng: np.random.Generator | None = None, learning_rate: float = 1e-2,
                   profile: str = "") -> "GrayboxModel":
        """Uniform weights and small Gaussian trajectories (std ``0.1 Omega`` by default)."""
        rng = np.random.default_rng() if rng is None else rng
        std = 0.1 * omega if init_std is None else init_std
        beta = rng.normal(0.0, std, size=(n_realizations, M))
        return cls(T, M, omega, basis, np.zeros(n_realizations), beta,
                   Adam(lr=learning_rate), 0, profile)

    @property
    def K(self) -> int:
        return self.w_tilde.size

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def weights(self) -> np.ndarray:
        return softmax(self.w_tilde)

    @property
    def params(self) -> dict:
        return {"w_tilde": self.w_tilde, "beta_hat": self.beta_hat}

    def copy(self) -> "GrayboxModel":
        return copy.deepcopy(self)


def _as_samples(model: GrayboxModel, samples) -> np.ndarray:
    if isinstance(samples, PulseSequence):
        samples = samples.samples[None]
    samples = np.ascontiguousarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[None]
    if samples.shape[-1] != model.M:
        raise ValueError(f"pulse has {samples.shape[-1]} steps but the model uses {model.M}")
    return samples


def _propagate(model: GrayboxModel, samples: np.ndarray):
    hx = 0.5 * samples
    hz = np.ascontiguousarray(0.5 * (model.omega + model.beta_hat))
    q = su2.propagate_shared(hx, hz, model.dt)
    return hx, hz, q


def forward(model: GrayboxModel, p):
    """
    Predicted features and probed V_O operators.

    ``p`` is a :class:`PulseSequence` or control samples of shape (M,) or (E, M).
    Returns ``(features, vo)`` with features (S,) for a single pulse or (E, S),
    and ``vo`` mapping each observable axis to its 2x2 (or E x 2 x 2) operator.
    """
    single = isinstance(p, PulseSequence) or np.ndim(p) == 1
    samples = _as_samples(model, p)
    _, _, q = _propagate(model, samples)
    U0 = su2.quaternion_to_unitary(control_quaternions(samples, model.omega, model.dt))
    frames = su2.quaternion_to_unitary(q) @ np.conj(np.swapaxes(U0, -1, -2))[:, None]
    features, vo = features_from_frames(frames, U0, model.weights, model.basis)
    if single:
        return features[0], {axis: v[0] for axis, v in vo.items()}
    return features, vo


def _selected_rotations(model: GrayboxModel, R: np.ndarray) -> np.ndarray:
    """Per-realization features ``(R_k n_s)_{a_s}``, shape (E, K, S)."""
    rows = R[:, :, model.basis.axis_indices, :]
    return np.einsum("eksb,sb->eks", rows, model.basis.bloch_vectors)


def predict(model: GrayboxModel, samples) -> np.ndarray:
    """Features (E, S) through the rotation form; agrees with :func:`forward` to rounding."""
    samples = _as_samples(model, samples)
    _, _, q = _propagate(model, samples)
    P = _selected_rotations(model, su2.rotation_matrices(q))
    return np.einsum("k,eks->es", model.weights, P)


def loss(model: GrayboxModel, samples, targets) -> float:
    """Mean squared error over examples and basis entries."""
    pred = predict(model, samples)
    return float(np.mean((pred - np.asarray(targets)) ** 2))


def gradients(model: GrayboxModel, samples, targets):
    """
    MSE loss and its gradient with respect to ``w_tilde`` and ``beta_hat``.

    Returns ``(loss, {"w_tilde": ..., "beta_hat": ...})``.
    """
    samples = _as_samples(model, samples)
    targets = np.asarray(targets, dtype=float)
    hx, hz, q = _propagate(model, samples)
    R = su2.rotation_matrices(q)
    P = _selected_rotations(model, R)
    w = model.weights
    pred = np.einsum("k,eks->es", w, P)
    resid = pred - targets
    value = float(np.mean(resid ** 2))
    dF = 2.0 * resid / resid.size
    gw = np.einsum("es,eks->k", dF, P)
    g_wt = w * (gw - np.dot(w, gw))
    gP = dF[:, None, :] * w[None, :, None]
    gR = np.zeros_like(R)
    n = model.basis.bloch_vectors
    for s, a in enumerate(model.basis.axis_indices):
        gR[:, :, a, :] += gP[:, :, s, None] * n[s]
    gq = su2.rotation_matrices_vjp(q, gR)
    _, ghz = su2.propagate_shared_vjp(hx, hz, model.dt, q, gq)
    return value, {"w_tilde": g_wt, "beta_hat": 0.5 * ghz}


def observable_rows(model: GrayboxModel, samples, with_vjp: bool = False):
    """
    Weighted first-row averages ``g_a = sum_k w_k R_k[a, :]`` per observable.

    For Pauli ``O = σ_a`` the probed operator is ``V_O = σ_a sum_c (R0 g_a)_c σ_c``
    with ``R0`` the rotation of ``U0``, so ``||V_O - V_O'||_F = sqrt(2) ||g_a - g_a'||``
    for two models sharing the control path. Returns
    an array (E, n_obs, 3); with ``with_vjp`` also a function mapping a
    cotangent of that shape to the gradient with respect to the control samples.
    """
    samples = _as_samples(model, samples)
    hx, hz, q = _propagate(model, samples)
    R = su2.rotation_matrices(q)
    idx = ["xyz".index(a) for a in model.basis.observables]
    w = model.weights
    rows = np.einsum("k,ekab->eab", w, R[:, :, idx, :])
    if not with_vjp:
        return rows

    def vjp(cot):
        gR = np.zeros_like(R)
        gR[:, :, idx, :] = w[None, :, None, None] * np.asarray(cot)[:, None, :, :]
        gq = su2.rotation_matrices_vjp(q, gR)
        ghx, _ = su2.propagate_shared_vjp(hx, hz, model.dt, q, gq)
        return 0.5 * ghx

    return rows, vjp


def split_indices(n: int, test_fraction: float, seed: int):
    """Deterministic shuffled split; returns ``(train, test)`` index arrays."""
    if not 0 <= test_fraction < 1:
        raise ValueError("test fraction must be in [0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(test_fraction * n))
    if n - n_test < 1:
        raise ValueError("split leaves no training examples")
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def train(model: GrayboxModel, dataset: CharacterizationSet, test_fraction: float = 0.1,
          iterations: int = 1000, seed: int = 0, log_every: int = 100):
    """
    Full-batch Adam on the MSE.

    Returns the parameters with the lowest test MSE seen (the training MSE when
    there is no test split) and a history dict with per-iteration ``train``
    and ``test`` MSE, both evaluated before that iteration's update.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    model = model.copy()
    tr, te = split_indices(len(dataset), test_fraction, seed)
    samples = dataset.samples
    X, Y = samples[tr], dataset.features[tr]
    Xt, Yt = samples[te], dataset.features[te]
    history = {"train": [], "test": []}
    best, best_score = model.copy(), np.inf
    for it in range(iterations):
        value, grads = gradients(model, X, Y)
        test_value = loss(model, Xt, Yt) if te.size else value
        if not (np.isfinite(value) and np.isfinite(test_value)
                and all(np.all(np.isfinite(g)) for g in grads.values())):
            raise TrainingDiverged(f"non-finite loss or gradient at iteration {model.iteration} "
                                   f"(train={value}, test={test_value})")
        history["train"].append(value)
        history["test"].append(test_value)
        if test_value < best_score:
            best, best_score = model.copy(), test_value
        model.optimizer.step(model.params, grads)
        model.iteration += 1
        if log_every and (it + 1) % log_every == 0:
            log.info("graybox %s iter %d: train %.3e test %.3e", model.profile, it + 1, value, test_value)
    # the final update has not been scored yet
    value = loss(model, X, Y)
    test_value = loss(model, Xt, Yt) if te.size else value
    if test_value < best_score:
        best = model.copy()
    best.optimizer = model.optimizer
    best.iteration = model.iteration
    history = {k: np.asarray(v) for k, v in history.items()}
    return best, history
