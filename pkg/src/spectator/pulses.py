"""
Gaussian pulse trains ``f(t) = sum_k A_k exp(-(t - mu_k)^2 / (2 sigma^2))``.

Pulses never overlap: centers sit in ``[3 sigma, T - 3 sigma]`` and are at
least ``6 sigma`` apart. The default width is ``sigma = T / (12 n)``, i.e. a
sixth of half a slot.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .quantum import SIGMA_X, SIGMA_Z, HamiltonianTrajectory

_FEASIBILITY_TOL = 1e-9


def default_width(n: int, T: float) -> float:
    return T / (2 * n) / 6.0


def grid_times(T: float, M: int) -> np.ndarray:
    """Left endpoints ``j T / M`` for ``j = 0..M-1``."""
    return np.arange(M) * (T / M)


def gaussian_train(amplitudes, centers, sigma: float, t) -> np.ndarray:
    """
    Evaluate pulse trains on times ``t``.

    ``amplitudes`` and ``centers`` have shape ``(..., n)``; the result has shape
    ``(..., len(t))``.
    """
    A = np.asarray(amplitudes, dtype=float)[..., :, None]
    mu = np.asarray(centers, dtype=float)[..., :, None]
    return np.sum(A * np.exp(-((np.asarray(t) - mu) ** 2) / (2 * sigma ** 2)), axis=-2)


def check_geometry(centers, sigma: float, T: float) -> None:
    mu = np.asarray(centers, dtype=float)
    if np.any(mu < 3 * sigma - _FEASIBILITY_TOL) or np.any(mu > T - 3 * sigma + _FEASIBILITY_TOL):
        raise ValueError("pulse centers must lie in [3 sigma, T - 3 sigma]")
    if np.any(np.diff(mu) < 6 * sigma - _FEASIBILITY_TOL):
        raise ValueError("pulse centers must be sorted and at least 6 sigma apart")


@dataclass(frozen=True, eq=False)
class PulseSequence:
    """A non-overlapping Gaussian pulse train sampled on ``M`` steps of ``[0, T]``."""

    amplitudes: np.ndarray
    centers: np.ndarray
    sigma: float
    T: float
    M: int

    def __post_init__(self):
        A = np.array(self.amplitudes, dtype=float)
        mu = np.array(self.centers, dtype=float)
        if A.ndim != 1 or A.shape != mu.shape:
            raise ValueError("amplitudes and centers must be 1-D arrays of equal length")
        if not np.all(np.isfinite(A)):
            raise ValueError("amplitudes must be finite")
        if self.M < 1 or not self.T > 0 or not self.sigma > 0:
            raise ValueError("need M >= 1, T > 0 and sigma > 0")
        check_geometry(mu, self.sigma, self.T)
        A.flags.writeable = False
        mu.flags.writeable = False
        object.__setattr__(self, "amplitudes", A)
        object.__setattr__(self, "centers", mu)
        object.__setattr__(self, "M", int(self.M))

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @property
    def dt(self) -> float:
        return self.T / self.M

    @cached_property
    def samples(self) -> np.ndarray:
        f = gaussian_train(self.amplitudes, self.centers, self.sigma, grid_times(self.T, self.M))
        f.flags.writeable = False
        return f

    def with_amplitudes(self, amplitudes) -> "PulseSequence":
        return PulseSequence(amplitudes, self.centers, self.sigma, self.T, self.M)

    def resampled(self, M: int) -> "PulseSequence":
        return PulseSequence(self.amplitudes, self.centers, self.sigma, self.T, M)


def zero_pulse(n: int, T: float, M: int, sigma: float | None = None) -> PulseSequence:
    """All-zero train with evenly spaced centers."""
    sigma = default_width(n, T) if sigma is None else sigma
    centers = (np.arange(n) + 0.5) * (T / n)
    return PulseSequence(np.zeros(n), centers, sigma, T, M)


def random_pulse(n: int, T: float, M: int, amp_range, rng: np.random.Generator,
                 sigma: float | None = None) -> PulseSequence:
    """
    Random train: uniform amplitudes, one center per slot.

    ``[0, T]`` is cut into ``n`` equal slots; each center is uniform on the part
    of its slot that keeps the pulse's 3-sigma support inside the slot.
    """
    sigma = default_width(n, T) if sigma is None else sigma
    lo, hi = (float(v) for v in amp_range)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise ValueError(f"invalid amplitude range {amp_range}")
    slot = T / n
    if slot < 6 * sigma:
        raise ValueError(f"{n} pulses of width {sigma} do not fit without overlap in T={T}")
    A = rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, lo)
    starts = np.arange(n) * slot + 3 * sigma
    centers = starts + rng.uniform(0.0, 1.0, size=n) * (slot - 6 * sigma)
    return PulseSequence(A, centers, sigma, T, M)


def clamp(p: PulseSequence, lo: float, hi: float) -> PulseSequence:
    if not lo < hi:
        raise ValueError("clamp needs lo < hi")
    return p.with_amplitudes(np.clip(p.amplitudes, lo, hi))


def project_centers(centers, sigma: float, T: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Nearest-feasible centers after an unconstrained step.

    Returns ``(order, projected)`` where ``order`` is the sorting permutation
    applied to the input (amplitudes must follow it).
    """
    mu = np.asarray(centers, dtype=float)
    n = mu.size
    if n * 6 * sigma > T + _FEASIBILITY_TOL:
        raise ValueError("infeasible pulse geometry")
    order = np.argsort(mu, kind="stable")
    mu = np.clip(mu[order], 3 * sigma, T - 3 * sigma)
    for k in range(1, n):
        mu[k] = max(mu[k], mu[k - 1] + 6 * sigma)
    mu[-1] = min(mu[-1], T - 3 * sigma)
    for k in range(n - 2, -1, -1):
        mu[k] = min(mu[k], mu[k + 1] - 6 * sigma)
    return order, mu


def build_control_hamiltonian(p: PulseSequence, omega: float) -> HamiltonianTrajectory:
    """Samples of ``f(t) σx / 2 + Omega σz / 2``."""
    f = p.samples
    H = 0.5 * f[:, None, None] * SIGMA_X + 0.5 * omega * SIGMA_Z
    return HamiltonianTrajectory(H, p.dt)
