"""
Monte Carlo ground truth for the spectator qubit and characterization datasets.

For each realization the full evolution under ``(f σx + (Omega + beta) σz)/2``
is propagated; with the control-only unitary ``U0`` the modified interaction
frame is ``U_full U0^dagger``. Uniformly weighted frames give ``V_O``, and the
features are ``tr(V_O U0 rho U0^dagger O)`` for every basis pair.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import su2
from .noise import NoiseProfileSpec, NoiseRealizationSet, generate
from .pulses import PulseSequence, default_width, gaussian_train, grid_times, random_pulse
from .quantum import (SIGMA_X, bloch_vector, check_density, expectation, pauli, pauli_axis,
                      pure_state, vo_from_frames)
from .seeding import subseed

FEATURE_EPS = 1e-6
# (examples x realizations x steps) per propagation call, bounds peak memory
_CHUNK_ELEMENTS = 2 ** 23


@dataclass(frozen=True, eq=False)
class MeasurementBasisSet:
    """Ordered ``(initial density matrix, Pauli observable)`` pairs."""

    pairs: tuple

    def __post_init__(self):
        pairs = []
        for rho, O in self.pairs:
            rho = np.asarray(rho, dtype=complex)
            O = np.asarray(O, dtype=complex)
            check_density(rho)
            pauli_axis(O)
            pairs.append((rho, O))
        if not pairs:
            raise ValueError("basis set is empty")
        object.__setattr__(self, "pairs", tuple(pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def axes(self) -> list[str]:
        return [pauli_axis(O) for _, O in self.pairs]

    @property
    def observables(self) -> list[str]:
        """Distinct observable axes in order of first use."""
        return list(dict.fromkeys(self.axes))

    @property
    def axis_indices(self) -> np.ndarray:
        return np.array(["xyz".index(a) for a in self.axes])

    @property
    def bloch_vectors(self) -> np.ndarray:
        return np.array([bloch_vector(rho) for rho, _ in self.pairs])


def default_basis() -> MeasurementBasisSet:
    """σx measured after preparing |+x>, |+y> and |0>."""
    states = [pure_state([1, 1]), pure_state([1, 1j]), pure_state([1, 0])]
    return MeasurementBasisSet(tuple((rho, SIGMA_X) for rho in states))


def features_from_frames(frames: np.ndarray, U0: np.ndarray, weights: np.ndarray,
                         basis: MeasurementBasisSet):
    """
    Expectations for every basis pair from modified-interaction frames.

    ``frames`` is (E, K, 2, 2) and ``U0`` is (E, 2, 2). Returns the features
    (E, S) and a dict of V_O operators (E, 2, 2) keyed by observable axis.
    """
    vo = {axis: vo_from_frames(frames, weights, pauli(axis)) for axis in basis.observables}
    cols = [expectation(vo[pauli_axis(O)], U0, rho, O, check=False) for rho, O in basis.pairs]
    return np.stack(cols, axis=-1), vo


def control_quaternions(samples: np.ndarray, omega: float, dt: float) -> np.ndarray:
    hx = 0.5 * np.ascontiguousarray(samples, dtype=float)
    hz = np.full((1, hx.shape[1]), 0.5 * omega)
    return su2.propagate_shared(hx, hz, dt)[:, 0]


def simulate_batch(samples: np.ndarray, betas: np.ndarray, dt: float, basis: MeasurementBasisSet,
                   omega: float) -> np.ndarray:
    """
    Features for control rows ``samples`` (E, M), each with its own noise rows ``betas`` (E, K, M).
    """
    samples = np.ascontiguousarray(samples, dtype=float)
    betas = np.asarray(betas, dtype=float)
    E, K, M = betas.shape
    if samples.shape != (E, M):
        raise ValueError(f"pulse grid {samples.shape} does not match realizations {betas.shape}")
    q0 = control_quaternions(samples, omega, dt)
    U0 = su2.quaternion_to_unitary(q0)
    weights = np.full(K, 1.0 / K)
    out = np.empty((E, len(basis)))
    step = max(1, _CHUNK_ELEMENTS // (K * M))
    for start in range(0, E, step):
        sl = slice(start, start + step)
        hz = 0.5 * (omega + np.ascontiguousarray(betas[sl]))
        q = su2.propagate_paired(0.5 * samples[sl], hz, dt)
        frames = su2.quaternion_to_unitary(q) @ np.conj(np.swapaxes(U0[sl], -1, -2))[:, None]
        out[sl], _ = features_from_frames(frames, U0[sl], weights, basis)
    return out


def simulate_measurements(p: PulseSequence, realizations: NoiseRealizationSet,
                          basis: MeasurementBasisSet, omega: float) -> np.ndarray:
    """Ensemble-averaged expectations for one pulse; returns one value per basis pair."""
    if realizations.M != p.M:
        raise ValueError(f"pulse has {p.M} steps but realizations have {realizations.M}")
    if not np.isclose(realizations.dt, p.dt, rtol=1e-12, atol=0.0):
        raise ValueError("pulse and realizations use different time steps")
    return simulate_batch(p.samples[None], realizations.values[None], p.dt, basis, omega)[0]


@dataclass(frozen=True)
class PulsePolicy:
    """How characterization pulses are drawn."""

    n: int = 5
    amp_range: tuple[float, float] = (-100.0, 100.0)
    sigma: float | None = None


@dataclass(frozen=True, eq=False)
class CharacterizationExample:
    pulse: PulseSequence
    features: np.ndarray
    profile: str


@dataclass(eq=False)
class CharacterizationSet(Sequence):
    """Random pulses and their measured features for one noise profile."""

    amplitudes: np.ndarray
    centers: np.ndarray
    sigma: float
    T: float
    M: int
    features: np.ndarray
    profile: str
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.subset(np.arange(len(self))[i])
        pulse = PulseSequence(self.amplitudes[i], self.centers[i], self.sigma, self.T, self.M)
        return CharacterizationExample(pulse, self.features[i].copy(), self.profile)

    def subset(self, index) -> "CharacterizationSet":
        index = np.asarray(index)
        return CharacterizationSet(self.amplitudes[index], self.centers[index], self.sigma, self.T,
                                   self.M, self.features[index], self.profile, dict(self.metadata))

    @property
    def samples(self) -> np.ndarray:
        return gaussian_train(self.amplitudes, self.centers, self.sigma, grid_times(self.T, self.M))


def build_dataset(profile: NoiseProfileSpec, count: int, K: int, basis: MeasurementBasisSet,
                  pulse_policy: PulsePolicy, seed: int, *, T: float, M: int, omega: float,
                  chunk: int = 64) -> CharacterizationSet:
    """
    Characterization data: ``count`` random pulses, each measured with ``K`` fresh realizations.

    Pulses come from one stream derived from ``seed``; the realizations for
    example ``i`` come from ``subseed(seed, 1, i)``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    sigma = default_width(pulse_policy.n, T) if pulse_policy.sigma is None else pulse_policy.sigma
    rng = np.random.default_rng(subseed(seed, 0))
    pulses = [random_pulse(pulse_policy.n, T, M, pulse_policy.amp_range, rng, sigma) for _ in range(count)]
    A = np.array([p.amplitudes for p in pulses])
    mu = np.array([p.centers for p in pulses])
    samples = gaussian_train(A, mu, sigma, grid_times(T, M))
    features = np.empty((count, len(basis)))
    for start in range(0, count, chunk):
        idx = range(start, min(count, start + chunk))
        betas = np.stack([generate(profile, K, M, T, subseed(seed, 1, i)).values for i in idx])
        features[start:idx.stop] = simulate_batch(samples[start:idx.stop], betas, T / M, basis, omega)
    return CharacterizationSet(A, mu, sigma, T, M, features, profile.kind,
                               {"K": K, "seed": int(seed), "omega": omega})
