"""
Single-qubit evolution primitives.

Matrices are complex numpy arrays whose last two axes have shape ``(2, 2)``.
Any leading axes are batch axes, so most functions here evaluate many
unitaries at once.

Noise enters through the modified interaction picture: for control unitary
``U0(T)`` and interaction unitary ``UI(T)`` the noisy frame is
``U0 UI U0^dagger`` and the noise operator for an observable ``O`` is

.. math::

    V_O = O^{-1} \\langle \\tilde U_I^\\dagger O \\tilde U_I \\rangle

so that ``<O(T)> = tr(V_O U0 rho U0^dagger O)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

_PAULI = {"0": SIGMA_0, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
PAULI_VECTOR = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

HERMITIAN_WARN_TOL = 1e-10


def pauli(axis: str) -> np.ndarray:
    """Return a copy of the Pauli matrix for ``axis`` in {'x', 'y', 'z', '0'}."""
    try:
        return _PAULI[str(axis).lower()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected one of x, y, z, 0") from None


def pauli_axis(O: np.ndarray) -> str:
    """Identify which of σx, σy, σz the matrix ``O`` is."""
    O = np.asarray(O)
    for axis in "xyz":
        if np.allclose(O, _PAULI[axis], atol=1e-12):
            return axis
    raise ValueError("observable is not a Pauli matrix")


def dagger(U: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(U, -1, -2))


def unitarity_error(U: np.ndarray) -> np.ndarray:
    """Frobenius norm of ``U^dagger U - I`` for each matrix in the batch."""
    return np.linalg.norm(dagger(U) @ U - SIGMA_0, axis=(-2, -1))


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    """Real Bloch vector ``(tr rho σx, tr rho σy, tr rho σz)``."""
    return np.real(np.einsum("...ij,kji->...k", rho, PAULI_VECTOR))


def pure_state(vector) -> np.ndarray:
    psi = np.asarray(vector, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, tol: float = 1e-9) -> None:
    rho = np.asarray(rho)
    if rho.shape[-2:] != (2, 2):
        raise ValueError(f"density matrix must be 2x2, got shape {rho.shape}")
    if np.max(np.abs(rho - dagger(rho))) > tol:
        raise ValueError("density matrix is not Hermitian")
    if np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1)) > tol:
        raise ValueError("density matrix does not have unit trace")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValueError("density matrix is not positive semidefinite")


def hermitize(H: np.ndarray, name: str = "Hamiltonian") -> np.ndarray:
    """Symmetrize ``H`` as ``(H + H^dagger)/2``, warning on visible asymmetry."""
    H = np.asarray(H, dtype=complex)
    asym = np.max(np.abs(H - dagger(H)), initial=0.0)
    if asym > HERMITIAN_WARN_TOL:
        warnings.warn(f"{name} deviates from Hermitian by {asym:.3g}; symmetrizing",
                      RuntimeWarning, stacklevel=3)
    return 0.5 * (H + dagger(H))


def pauli_decompose(H: np.ndarray):
    """Split a Hermitian matrix into ``c σ0 + a·σ``; returns ``(c, a)`` as real arrays."""
    c = 0.5 * np.real(np.trace(H, axis1=-2, axis2=-1))
    a = 0.5 * np.real(np.einsum("...ij,kji->...k", H, PAULI_VECTOR))
    return c, a


def expm_hermitian_step(H: np.ndarray, dt: float) -> np.ndarray:
    """
    Exact ``exp(-i H dt)`` for Hermitian 2x2 ``H``.

    Uses ``exp(-i(c σ0 + a·σ) dt) = e^{-i c dt} (cos(|a| dt) σ0 - i sin(|a| dt) â·σ)``;
    the ``|a| = 0`` limit is handled through ``np.sinc``.
    """
    c, a = pauli_decompose(np.asarray(H, dtype=complex))
    r = np.linalg.norm(a, axis=-1)
    # sin(r dt) / r, finite at r = 0
    s = dt * np.sinc(r * dt / np.pi)
    gen = np.einsum("...k,kij->...ij", a, PAULI_VECTOR)
    U = np.cos(r * dt)[..., None, None] * SIGMA_0 - 1j * s[..., None, None] * gen
    return np.exp(-1j * c * dt)[..., None, None] * U


@dataclass(frozen=True, eq=False)
class HamiltonianTrajectory:
    """
    Hamiltonian samples ``H(j dt)`` for ``j = 0..M-1`` (angular frequency, hbar = 1).

    ``samples`` has shape ``(..., M, 2, 2)``; leading axes are batch axes.
    Samples are symmetrized on construction.
    """

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim < 3 or samples.shape[-2:] != (2, 2):
            raise ValueError(f"samples must have shape (..., M, 2, 2), got {samples.shape}")
        if samples.shape[-3] < 1:
            raise ValueError("trajectory needs at least one sample")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        object.__setattr__(self, "samples", hermitize(samples))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def M(self) -> int:
        return self.samples.shape[-3]

    @property
    def T(self) -> float:
        return self.M * self.dt

    def __add__(self, other: "HamiltonianTrajectory") -> "HamiltonianTrajectory":
        _check_compatible(self, other)
        return HamiltonianTrajectory(self.samples + other.samples, self.dt)


def _check_compatible(a: HamiltonianTrajectory, b: HamiltonianTrajectory) -> None:
    if a.M != b.M:
        raise ValueError(f"trajectories have different step counts ({a.M} vs {b.M})")
    if not np.isclose(a.dt, b.dt, rtol=1e-12, atol=0.0):
        raise ValueError(f"trajectories have different time steps ({a.dt} vs {b.dt})")


def dephasing_trajectory(beta: np.ndarray, dt: float, coupling: float = 0.5) -> HamiltonianTrajectory:
    """Noise Hamiltonian ``coupling * beta(t) σz`` from real samples ``beta`` (..., M)."""
    beta = np.asarray(beta, dtype=float)
    return HamiltonianTrajectory(coupling * beta[..., None, None] * SIGMA_Z, dt)


def ordered_product(steps: np.ndarray) -> np.ndarray:
    """
    Product ``steps[M-1] @ ... @ steps[1] @ steps[0]`` along axis -3.

    Evaluated as a pairwise tree so the Python loop runs ``log2(M)`` times.
    """
    steps = np.asarray(steps)
    while steps.shape[-3] > 1:
        m = steps.shape[-3]
        paired = steps[..., 1:m - m % 2:2, :, :] @ steps[..., 0:m - m % 2:2, :, :]
        if m % 2:
            paired = np.concatenate([paired, steps[..., m - 1:, :, :]], axis=-3)
        steps = paired
    return steps[..., 0, :, :]


def time_ordered_unitary(traj: HamiltonianTrajectory) -> np.ndarray:
    """Left-endpoint product of step exponentials, latest step on the left."""
    return ordered_product(expm_hermitian_step(traj.samples, traj.dt))


def _interaction_and_control(ctrl: HamiltonianTrajectory, noise: HamiltonianTrajectory):
    _check_compatible(ctrl, noise)
    dt = ctrl.dt
    full = expm_hermitian_step(ctrl.samples, dt)
    half = expm_hermitian_step(ctrl.samples, 0.5 * dt)
    batch = np.broadcast_shapes(ctrl.samples.shape[:-3], noise.samples.shape[:-3])
    frames = np.empty(batch + (ctrl.M, 2, 2), dtype=complex)
    U0 = np.broadcast_to(SIGMA_0, ctrl.samples.shape[:-3] + (2, 2)).copy()
    for j in range(ctrl.M):
        # control frame at the step midpoint keeps U0 UI equal to the full
        # product to second order in dt for piecewise-constant Hamiltonians
        frames[..., j, :, :] = half[..., j, :, :] @ U0
        U0 = full[..., j, :, :] @ U0
    rotated = dagger(frames) @ noise.samples @ frames
    UI = ordered_product(expm_hermitian_step(rotated, dt))
    return UI, U0


def interaction_unitary(ctrl: HamiltonianTrajectory, noise: HamiltonianTrajectory) -> np.ndarray:
    """
    Interaction-picture unitary ``UI(T)`` of ``noise`` in the frame of ``ctrl``.

    The noise samples are rotated into the running control frame and multiplied
    with the same left-endpoint step product as :func:`time_ordered_unitary`.
    """
    return _interaction_and_control(ctrl, noise)[0]


def modified_interaction_unitary(ctrl: HamiltonianTrajectory, noise: HamiltonianTrajectory) -> np.ndarray:
    """``U0(T) UI(T) U0(T)^dagger``."""
    UI, U0 = _interaction_and_control(ctrl, noise)
    return U0 @ UI @ dagger(U0)


def _check_weights(weights: np.ndarray, K: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (K,):
        raise ValueError(f"expected {K} weights, got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability vector")
    return w


def vo_from_frames(frames: np.ndarray, weights: np.ndarray, O: np.ndarray) -> np.ndarray:
    """
    ``O^{-1} sum_k w_k U_k^dagger O U_k`` over axis -3 of ``frames``.

    ``frames`` holds modified interaction unitaries with shape ``(..., K, 2, 2)``.
    """
    O = np.asarray(O, dtype=complex)
    if abs(np.linalg.det(O)) < 1e-12:
        raise ValueError("observable is singular")
    w = _check_weights(weights, frames.shape[-3])
    conj = dagger(frames) @ O @ frames
    avg = np.einsum("k,...kij->...ij", w, conj)
    return np.linalg.inv(O) @ avg


def vo_empirical(ctrl: HamiltonianTrajectory, noise: HamiltonianTrajectory,
                 weights: np.ndarray, O: np.ndarray) -> np.ndarray:
    """
    Weighted V_O estimate over a batch of noise trajectories.

    Parameters
    ----------
    ctrl : HamiltonianTrajectory
        Control Hamiltonian, samples of shape ``(M, 2, 2)``.
    noise : HamiltonianTrajectory
        Noise Hamiltonians with a leading realization axis, ``(K, M, 2, 2)``.
    weights : array_like, shape (K,)
        Probability vector over realizations.
    O : ndarray
        Invertible observable.
    """
    if noise.samples.ndim != 4:
        raise ValueError("noise trajectories need a leading realization axis")
    frames = modified_interaction_unitary(ctrl, noise)
    return vo_from_frames(frames, weights, O)


def expectation(Vo: np.ndarray, U0: np.ndarray, rho0: np.ndarray, O: np.ndarray,
                check: bool = True) -> np.ndarray:
    """
    ``tr(Vo U0 rho0 U0^dagger O)``, real.

    Raises if the imaginary part of the trace exceeds 1e-9 or the result
    leaves ``[-1 - 1e-6, 1 + 1e-6]``.
    """
    O = np.asarray(O, dtype=complex)
    if check:
        check_density(rho0)
        if np.max(np.abs(O - dagger(O))) > 1e-12:
            raise ValueError("observable is not Hermitian")
    value = np.trace(Vo @ U0 @ rho0 @ dagger(U0) @ O, axis1=-2, axis2=-1)
    if np.max(np.abs(value.imag), initial=0.0) > 1e-9:
        raise ValueError(f"expectation has imaginary part {np.max(np.abs(value.imag)):.3g}")
    value = value.real
    if np.max(np.abs(value), initial=0.0) > 1 + 1e-6:
        raise ValueError("expectation value outside [-1, 1]")
    return value
