"""
Dephasing noise profiles N0-N5.

``beta(t)`` is sampled on the left-endpoint grid ``t_j = j T / M`` and enters
the qubit Hamiltonian as ``(Omega + beta(t)) σz / 2``.

* N0 -- no noise.
* N1, N5 -- Gaussian noise synthesized from a one-sided PSD (1/f with a
  cutoff, a plateau and a Gaussian bump at 30 or 40).
* N2 -- white noise circularly convolved with a Gaussian low-pass kernel.
* N3 -- N2 times a deterministic envelope (non-stationary).
* N4 -- the N3 construction squared and re-centred (non-Gaussian).

Frequencies are in cycles per unit time. Each realization draws from its own
counter-based stream, so realization ``k`` of a batch does not depend on how
many other realizations are generated alongside it.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

PROFILE_KINDS = ("N0", "N1", "N2", "N3", "N4", "N5")
_BUMP_CENTERS = {"N1": 30.0, "N5": 40.0}


@dataclass(frozen=True)
class NoiseProfileSpec:
    """
    Generative description of one noise profile.

    ``scale`` multiplies the final realizations. For N2-N4 the unscaled
    realizations have unit time-averaged ensemble variance.
    """

    kind: str
    scale: float = 1.0
    # PSD shape (N1, N5)
    cutoff: float = 15.0
    plateau: float = 1.0 / 16.0
    bump_amplitude: float = 0.5
    bump_width: float = 50.0
    bump_center: float | None = None
    # coloring kernel std as a fraction of T, truncated at kernel_truncation stds (N2-N4)
    kernel_width: float = 1.0 / 32.0
    kernel_truncation: float = 4.0
    # envelope 1 + depth * sin(2 pi t / T) (N3, N4)
    envelope_depth: float = 0.75

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown noise profile {self.kind!r}; valid ids: {', '.join(PROFILE_KINDS)}")
        if self.bump_center is None and self.kind in _BUMP_CENTERS:
            object.__setattr__(self, "bump_center", _BUMP_CENTERS[self.kind])
        if self.scale < 0:
            raise ValueError("noise scale must be non-negative")

    @property
    def has_psd(self) -> bool:
        return self.kind in _BUMP_CENTERS


def profile_spec(kind: str, **overrides) -> NoiseProfileSpec:
    spec = NoiseProfileSpec(kind)
    return replace(spec, **overrides) if overrides else spec


@dataclass(frozen=True, eq=False)
class NoiseRealizationSet:
    """K realizations of ``beta(t)`` on M grid points (angular frequency)."""

    values: np.ndarray
    dt: float
    profile: str
    seed: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"realizations must be a K x M array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("realizations contain non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> float:
        return self.M * self.dt


def psd_eval(spec: NoiseProfileSpec, f) -> np.ndarray:
    """
    One-sided PSD ``S(f)`` of an N1/N5 profile, before ``scale``.

    ``S(f) = u(fc - f)/(f + 1) + p u(f - fc) + a exp(-(f - f0)^2 / w)`` with
    ``u(0) = 1/2``, which makes the 1/f branch meet the plateau continuously.
    """
    if not spec.has_psd:
        raise ValueError(f"profile {spec.kind} has no closed-form PSD")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("PSD is defined for f >= 0")
    low = np.heaviside(spec.cutoff - f, 0.5) / (f + 1.0)
    high = spec.plateau * np.heaviside(f - spec.cutoff, 0.5)
    bump = spec.bump_amplitude * np.exp(-(f - spec.bump_center) ** 2 / spec.bump_width)
    return low + high + bump


def realization_rngs(seed: int, K: int):
    """One Philox stream per realization, keyed by ``seed`` and offset by index."""
    key = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    for k in range(K):
        yield np.random.Generator(np.random.Philox(key=key, counter=k << 192))


def _white(seed: int, K: int, n: int) -> np.ndarray:
    out = np.empty((K, n))
    for k, rng in enumerate(realization_rngs(seed, K)):
        out[k] = rng.standard_normal(n)
    return out


def _psd_synthesis(spec: NoiseProfileSpec, K: int, M: int, dt: float, seed: int) -> np.ndarray:
    f = np.fft.rfftfreq(M, d=dt)
    nf = f.size
    S = psd_eval(spec, f)
    g = _white(seed, K, 2 * nf)
    # interior bins carry half the variance in each quadrature
    amp = np.sqrt(S * M / (4.0 * dt))
    spectrum = amp * (g[:, :nf] + 1j * g[:, nf:])
    real_bins = [0] + ([nf - 1] if M % 2 == 0 else [])
    for b in real_bins:
        spectrum[:, b] = np.sqrt(S[b] * M / dt) * g[:, b]
    return np.fft.irfft(spectrum, n=M, axis=-1)


def coloring_kernel(spec: NoiseProfileSpec, M: int, T: float) -> np.ndarray:
    """Circular Gaussian kernel with unit L2 norm, so colored white noise keeps unit variance."""
    dt = T / M
    width = spec.kernel_width * T
    lag = np.minimum(np.arange(M), M - np.arange(M)) * dt
    kernel = np.where(lag <= spec.kernel_truncation * width, np.exp(-0.5 * (lag / width) ** 2), 0.0)
    return kernel / np.linalg.norm(kernel)


def envelope(spec: NoiseProfileSpec, M: int, T: float) -> np.ndarray:
    t = np.arange(M) * (T / M)
    return 1.0 + spec.envelope_depth * np.sin(2 * np.pi * t / T)


def _colored(spec: NoiseProfileSpec, K: int, M: int, T: float, seed: int) -> np.ndarray:
    white = _white(seed, K, M)
    kernel = coloring_kernel(spec, M, T)
    return np.fft.irfft(np.fft.rfft(white, axis=-1) * np.fft.rfft(kernel), n=M, axis=-1)


def generate(spec: NoiseProfileSpec, K: int, M: int, T: float, seed: int) -> NoiseRealizationSet:
    """
    Draw ``K`` realizations of ``spec`` on ``M`` steps over ``[0, T]``.

    The output is a pure function of ``(spec, K, M, T, seed)``.
    """
    if K < 1 or M < 1:
        raise ValueError(f"K and M must be positive, got K={K}, M={M}")
    if not T > 0:
        raise ValueError("T must be positive")
    dt = T / M
    kind = spec.kind
    if kind == "N0":
        values = np.zeros((K, M))
    elif spec.has_psd:
        values = _psd_synthesis(spec, K, M, dt, seed)
    else:
        x = _colored(spec, K, M, T, seed)
        env = envelope(spec, M, T)
        if kind == "N2":
            values = x
        elif kind == "N3":
            values = x * env / np.sqrt(np.mean(env ** 2))
        else:
            # x * env has variance env^2; subtract the exact mean of its square
            y = (x * env) ** 2 - env ** 2
            values = y / np.sqrt(2.0 * np.mean(env ** 4))
    return NoiseRealizationSet(spec.scale * values, dt, kind, int(seed))


def periodogram(values: np.ndarray, dt: float):
    """
    One-sided periodogram matching the synthesis convention of :func:`generate`.

    Returns ``(f, P)`` where ``P`` has the leading shape of ``values``.
    """
    values = np.asarray(values, dtype=float)
    M = values.shape[-1]
    X = np.fft.rfft(values, axis=-1)
    P = (2.0 * dt / M) * np.abs(X) ** 2
    P[..., 0] /= 2
    if M % 2 == 0:
        P[..., -1] /= 2
    return np.fft.rfftfreq(M, d=dt), P
