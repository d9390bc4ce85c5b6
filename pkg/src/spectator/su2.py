"""
Fast propagators for the x-z driven qubit.

Every Hamiltonian in the simulations has the form ``hx σx + hz σz``. Step
unitaries are kept as unit quaternions ``(w, x, y, z)`` standing for
``w σ0 - i (x σx + y σy + z σz)``, so a matrix product is a Hamilton product
of four real numbers.

The kernels below run the left-endpoint step product for every
(pulse, realization) pair and its reverse-mode adjoint. The adjoint walks the
chain backwards, recovering earlier prefixes by multiplying with conjugated
steps instead of storing them, so memory stays O(batch).
"""
from __future__ import annotations

import os

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the system TBB is too old for numba; the builtin layer is always available
    numba.config.THREADING_LAYER = "workqueue"

_threads = os.environ.get("SPECTATOR_NUM_THREADS")
if _threads:
    numba.set_num_threads(int(_threads))

# x = |h| dt below which the derivative of sin(x)/r uses its Taylor series
_SERIES_CUTOFF = 1e-2
_QUARTER_PI = 0.7853981633974483


@numba.njit(cache=True, inline="always")
def _sincos(x):
    """sin and cos; Taylor polynomials (error < 2e-16) on |x| <= pi/4, libm elsewhere."""
    if abs(x) <= _QUARTER_PI:
        x2 = x * x
        s = x * (1.0 + x2 * (-1 / 6 + x2 * (1 / 120 + x2 * (-1 / 5040 + x2 * (
            1 / 362880 + x2 * (-1 / 39916800 + x2 * (1 / 6227020800 + x2 * (-1 / 1307674368000))))))))
        c = 1.0 + x2 * (-0.5 + x2 * (1 / 24 + x2 * (-1 / 720 + x2 * (1 / 40320 + x2 * (
            -1 / 3628800 + x2 * (1 / 479001600 + x2 * (-1 / 87178291200 + x2 / 20922789888000)))))))
        return s, c
    return np.sin(x), np.cos(x)


@numba.njit(cache=True, inline="always")
def _step(hx, hz, dt):
    r = np.sqrt(hx * hx + hz * hz)
    x = r * dt
    sn, c = _sincos(x)
    if r > 0.0:
        s = sn / r
    else:
        s = dt
    return c, s * hx, s * hz


@numba.njit(cache=True, inline="always")
def _step_with_grad(hx, hz, dt):
    r = np.sqrt(hx * hx + hz * hz)
    x = r * dt
    sn, c = _sincos(x)
    if x < _SERIES_CUTOFF:
        x2 = x * x
        s = dt * (1.0 + x2 * (-1.0 / 6.0 + x2 / 120.0)) if r == 0.0 else sn / r
        u = dt * dt * dt * (-1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0)
    else:
        inv = 1.0 / r
        s = sn * inv
        u = (dt * c - s) * inv * inv
    # d(c, s hx, 0, s hz) / d hx  and  / d hz
    dw_x = -dt * s * hx
    dx_x = u * hx * hx + s
    dz_x = u * hx * hz
    dw_z = -dt * s * hz
    dx_z = u * hx * hz
    dz_z = u * hz * hz + s
    return c, s * hx, s * hz, dw_x, dx_x, dz_x, dw_z, dx_z, dz_z


@numba.njit(cache=True)
def _chain(hx_row, hz_row, dt, out):
    w, x, y, z = 1.0, 0.0, 0.0, 0.0
    for j in range(hx_row.shape[0]):
        a, b, d = _step(hx_row[j], hz_row[j], dt)
        w, x, y, z = (a * w - b * x - d * z,
                      a * x + b * w - d * y,
                      a * y - b * z + d * x,
                      a * z + b * y + d * w)
    out[0] = w
    out[1] = x
    out[2] = y
    out[3] = z


@numba.njit(cache=True, parallel=True)
def propagate_shared(hx, hz, dt):
    """
    Final quaternions for every pair of control row and noise row.

    ``hx`` has shape (E, M), ``hz`` has shape (K, M); returns (E, K, 4).
    """
    E = hx.shape[0]
    K = hz.shape[0]
    out = np.empty((E, K, 4))
    for e in numba.prange(E):
        for k in range(K):
            _chain(hx[e], hz[k], dt, out[e, k])
    return out


@numba.njit(cache=True, parallel=True)
def propagate_paired(hx, hz, dt):
    """
    Final quaternions when every control row has its own noise rows.

    ``hx`` has shape (E, M), ``hz`` has shape (E, K, M); returns (E, K, 4).
    """
    E = hx.shape[0]
    K = hz.shape[1]
    out = np.empty((E, K, 4))
    for e in numba.prange(E):
        for k in range(K):
            _chain(hx[e], hz[e, k], dt, out[e, k])
    return out


@numba.njit(cache=True)
def propagate_shared_vjp(hx, hz, dt, q_final, g):
    """
    Reverse-mode gradient of ``sum_ek <g[e, k], q[e, k]>`` for :func:`propagate_shared`.

    Returns ``(d/d hx, d/d hz)`` with the shapes of ``hx`` and ``hz``.
    Accumulation order is fixed (e outer, k inner, steps descending).
    """
    E, M = hx.shape
    K = hz.shape[0]
    ghx = np.zeros((E, M))
    ghz = np.zeros((K, M))
    for e in range(E):
        for k in range(K):
            w, x, y, z = q_final[e, k, 0], q_final[e, k, 1], q_final[e, k, 2], q_final[e, k, 3]
            mw, mx, my, mz = g[e, k, 0], g[e, k, 1], g[e, k, 2], g[e, k, 3]
            for j in range(M - 1, -1, -1):
                a, b, d, dw_x, dx_x, dz_x, dw_z, dx_z, dz_z = _step_with_grad(hx[e, j], hz[k, j], dt)
                # previous prefix: conj(P) (x) q, with conj(P) = (a, -b, 0, -d)
                pw = a * w + b * x + d * z
                px = a * x - b * w + d * y
                py = a * y + b * z - d * x
                pz = a * z - b * y - d * w
                # gradient w.r.t. the step quaternion: mu (x) conj(prev)
                gw = mw * pw + mx * px + my * py + mz * pz
                gx = -mw * px + mx * pw - my * pz + mz * py
                gz = -mw * pz - mx * py + my * px + mz * pw
                ghx[e, j] += gw * dw_x + gx * dx_x + gz * dz_x
                ghz[k, j] += gw * dw_z + gx * dx_z + gz * dz_z
                # costate moves one step back: conj(P) (x) mu
                mw, mx, my, mz = (a * mw + b * mx + d * mz,
                                  a * mx - b * mw + d * my,
                                  a * my + b * mz - d * mx,
                                  a * mz - b * my - d * mw)
                w, x, y, z = pw, px, py, pz
    return ghx, ghz


def quaternion_to_unitary(q: np.ndarray) -> np.ndarray:
    """``w σ0 - i(x σx + y σy + z σz)`` as complex (..., 2, 2)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    U = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    U[..., 0, 0] = w - 1j * z
    U[..., 0, 1] = -y - 1j * x
    U[..., 1, 0] = y - 1j * x
    U[..., 1, 1] = w + 1j * z
    return U


def rotation_matrices(q: np.ndarray) -> np.ndarray:
    """Bloch rotation ``R`` with ``U σ_b U^dagger = sum_a R[a, b] σ_a``."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - w * z)
    R[..., 0, 2] = 2 * (x * z + w * y)
    R[..., 1, 0] = 2 * (x * y + w * z)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - w * x)
    R[..., 2, 0] = 2 * (x * z - w * y)
    R[..., 2, 1] = 2 * (y * z + w * x)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def rotation_matrices_vjp(q: np.ndarray, gR: np.ndarray) -> np.ndarray:
    """Pull a cotangent on :func:`rotation_matrices` back to the quaternion."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    G = [[gR[..., a, b] for b in range(3)] for a in range(3)]
    gq = np.empty_like(q)
    gq[..., 0] = 2 * (-z * G[0][1] + y * G[0][2] + z * G[1][0] - x * G[1][2]
                      - y * G[2][0] + x * G[2][1])
    gq[..., 1] = 2 * (y * G[0][1] + z * G[0][2] + y * G[1][0] - 2 * x * G[1][1] - w * G[1][2]
                      + z * G[2][0] + w * G[2][1] - 2 * x * G[2][2])
    gq[..., 2] = 2 * (-2 * y * G[0][0] + x * G[0][1] + w * G[0][2] + x * G[1][0] + z * G[1][2]
                      - w * G[2][0] + z * G[2][1] - 2 * y * G[2][2])
    gq[..., 3] = 2 * (-2 * z * G[0][0] - w * G[0][1] + x * G[0][2] + w * G[1][0]
                      - 2 * z * G[1][1] + y * G[1][2] + x * G[2][0] + y * G[2][1])
    return gq
