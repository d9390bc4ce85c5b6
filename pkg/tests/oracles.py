"""
Independent closed-form and quadrature oracles used only by the tests.

Filter-function convention
--------------------------
With ``H = (Omega + beta(t)) σz / 2`` the coherence phase is
``phi = ∫ y(t) beta(t) dt`` where ``y(t) = ±1`` flips sign at each ideal
π pulse. For a one-sided PSD ``S(f)`` (variance ``∫_0^∞ S df``, f in cycles
per unit time) the phase variance is ``∫_0^∞ S(f) |F(f)|^2 df`` with
``F(f) = ∫_0^T y(t) exp(2πi f t) dt``; free evolution gives
``|F|^2 = sin^2(π f T) / (π f)^2``. The overlap integral returned here is
``chi = var(phi) / 2``, so ``<X(T)> = exp(-chi) cos(Omega T)`` for |+x>.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate, linalg

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def expm(H, dt):
    """Generic scaling-and-squaring exponential of ``-i H dt``."""
    return linalg.expm(-1j * np.asarray(H, dtype=complex) * dt)


def filter_function(f, T, pulse_times=()):
    """``|F(f)|^2`` for free evolution or ideal instantaneous π pulses at ``pulse_times``."""
    f = np.atleast_1d(np.asarray(f, dtype=float))
    edges = np.concatenate([[0.0], np.sort(pulse_times), [T]])
    out = np.empty(f.size)
    for i, fi in enumerate(f):
        if fi == 0.0:
            F = sum((-1) ** k * (edges[k + 1] - edges[k]) for k in range(len(edges) - 1))
        else:
            w = 2j * np.pi * fi
            F = sum((-1) ** k * (np.exp(w * edges[k + 1]) - np.exp(w * edges[k])) / w
                    for k in range(len(edges) - 1))
        out[i] = abs(F) ** 2
    return out


def overlap_integral(psd, T, pulse_times=(), breakpoints=(), schedule="free"):
    """
    ``chi = 1/2 ∫_0^∞ S(f) |F(f)|^2 df`` by adaptive quadrature.

    ``schedule`` is ``"free"`` or ``"pi-pulses"`` (with ``pulse_times``);
    ``breakpoints`` are PSD discontinuities or peaks to split the integral at.
    """
    if schedule not in ("free", "pi-pulses"):
        raise ValueError(f"unsupported schedule {schedule!r}")
    if schedule == "free" and len(pulse_times):
        raise ValueError("free evolution takes no pulses")

    def integrand(f):
        return float(psd(f) * filter_function(f, T, pulse_times)[0])

    cuts = sorted({0.0, *[float(b) for b in breakpoints], 100.0})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += integrate.quad(integrand, a, b, limit=2000, epsabs=1e-13, epsrel=1e-11)[0]
    a = cuts[-1]
    if schedule == "free":
        # |F|^2 = (1 - cos 2 pi f T) / (2 pi^2 f^2): Fourier-weighted quadrature for the tail
        def smooth(f):
            return float(psd(f)) / (2 * np.pi ** 2 * f ** 2)

        total += integrate.quad(smooth, a, np.inf, epsabs=1e-14)[0]
        total -= integrate.quad(smooth, a, np.inf, weight="cos", wvar=2 * np.pi * T, epsabs=1e-14)[0]
    else:
        edges = np.linspace(a, 2000.0, 381)
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate.quad(integrand, lo, hi, epsabs=1e-14)[0]
    return 0.5 * total


def measurement_distance_identity(V1, V2, rho_c, O=SIGMA_X):
    """
    Both sides of the scalar-V_O separability identity.

    For ``V_j = I_j σ0`` the measured difference ``|tr(V1 rho_c O) - tr(V2 rho_c O)|``
    equals ``|I_1 - I_2| |tr(rho_c O)|``. Returns ``(lhs, rhs)``.
    """
    V1 = np.asarray(V1, dtype=complex)
    V2 = np.asarray(V2, dtype=complex)
    for V in (V1, V2):
        if abs(V[0, 1]) > 1e-14 or abs(V[1, 0]) > 1e-14 or abs(V[0, 0] - V[1, 1]) > 1e-14:
            raise ValueError("V must be proportional to the identity")
    lhs = abs(np.trace(V1 @ rho_c @ O) - np.trace(V2 @ rho_c @ O))
    rhs = abs(V1[0, 0] - V2[0, 0]) * abs(np.trace(rho_c @ O))
    return float(lhs), float(rhs)


def rabi_expectation(amplitude, omega, duration, rho0, O):
    """Closed-form expectation for a constant ``(A σx + Omega σz)/2`` segment."""
    H = 0.5 * (amplitude * SIGMA_X + omega * SIGMA_Z)
    r = 0.5 * np.hypot(amplitude, omega)
    n = H / r if r else np.zeros((2, 2))
    U = np.cos(r * duration) * SIGMA_0 - 1j * np.sin(r * duration) * n
    return float(np.real(np.trace(U @ rho0 @ U.conj().T @ O)))
