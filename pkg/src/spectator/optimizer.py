"""
Control-pulse search that pulls the graybox V_O estimates of several profiles apart.

The objective is the sum over unordered model pairs and observables of the
Frobenius distance between probed V_O operators. All models share the control
path, so each distance equals ``sqrt(2) ||g_i - g_j||`` with ``g`` the weighted
rotation rows from :func:`spectator.graybox.observable_rows`; the ascent uses
that form for its gradient and bookkeeping.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import graybox as gb
from .adam import Adam
from .pulses import (PulseSequence, check_geometry, default_width, gaussian_train, grid_times,
                     project_centers, random_pulse, zero_pulse)

log = logging.getLogger(__name__)


@dataclass(eq=False)
class DiscriminationProblem:
    """
    Models to separate plus the pulse search space.

    ``restarts`` random pulses are scored and the best one seeds the ascent.
    """

    models: list
    amp_bounds: tuple[float, float] = (-100.0, 100.0)
    n: int = 5
    sigma: float | None = None
    iterations: int = 500
    seed: int = 0
    restarts: int = 64
    lr_amplitude: float | None = None
    lr_center: float | None = None
    initial: PulseSequence | None = None
    method: str = "adam"

    def __post_init__(self):
        if len(self.models) < 1:
            raise ValueError("need at least one model")
        ref = self.models[0]
        for m in self.models[1:]:
            same = (m.M == ref.M and np.isclose(m.T, ref.T) and np.isclose(m.omega, ref.omega)
                    and m.basis.axes == ref.basis.axes
                    and np.allclose(m.basis.bloch_vectors, ref.basis.bloch_vectors))
            if not same:
                raise ValueError("models must share T, M, Omega and the measurement basis")
        lo, hi = (float(v) for v in self.amp_bounds)
        if not lo < hi:
            raise ValueError("amplitude bounds need lo < hi")
        self.amp_bounds = (lo, hi)
        if self.sigma is None:
            self.sigma = default_width(self.n, self.T)
        if self.method not in ("adam", "spsa"):
            raise ValueError(f"unknown method {self.method!r}; use 'adam' or 'spsa'")

    @property
    def T(self) -> float:
        return self.models[0].T

    @property
    def M(self) -> int:
        return self.models[0].M

    @property
    def N(self) -> int:
        return len(self.models)


def _pairs(N):
    return list(combinations(range(N), 2))


def pairwise_vo_distances(p, models) -> np.ndarray:
    """Symmetric (N, N) matrix of Frobenius distances summed over observables, from probed V_O."""
    vos = [gb.forward(m, p)[1] for m in models]
    D = np.zeros((len(models), len(models)))
    for i, j in _pairs(len(models)):
        D[i, j] = D[j, i] = sum(np.linalg.norm(vos[i][a] - vos[j][a]) for a in vos[i])
    return D


def objective(p: PulseSequence, problem: DiscriminationProblem) -> float:
    """Sum over unordered pairs and observables of ``||V_i - V_j||_F``."""
    return float(np.sum(np.triu(pairwise_vo_distances(p, problem.models), 1)))


def _row_objective(samples: np.ndarray, models, with_grad: bool = False):
    """Objective for each row of ``samples`` (E, M); optionally its gradient w.r.t. the samples."""
    out = [gb.observable_rows(m, samples, with_vjp=with_grad) for m in models]
    rows = [o[0] for o in out] if with_grad else out
    value = np.zeros(samples.shape[0])
    cots = [np.zeros_like(r) for r in rows]
    for i, j in _pairs(len(models)):
        d = rows[i] - rows[j]
        norm = np.linalg.norm(d, axis=-1)
        value += np.sqrt(2.0) * norm.sum(axis=-1)
        if with_grad:
            unit = np.sqrt(2.0) * d / np.where(norm > 0, norm, 1.0)[..., None]
            cots[i] += unit
            cots[j] -= unit
    if not with_grad:
        return value
    grad = sum(o[1](c) for o, c in zip(out, cots))
    return value, grad


def parameter_gradient(A, mu, sigma, T, M, grad_samples):
    """Chain a gradient on the samples to the amplitudes and centers."""
    t = grid_times(T, M)
    phi = np.exp(-((t - mu[:, None]) ** 2) / (2 * sigma ** 2))
    gA = phi @ grad_samples
    gmu = A * ((phi * (t - mu[:, None]) / sigma ** 2) @ grad_samples)
    return gA, gmu


def _project(A, mu, problem):
    order, mu = project_centers(mu, problem.sigma, problem.T)
    A = np.clip(A[order], *problem.amp_bounds)
    return A, mu


def _initial_pulse(problem: DiscriminationProblem, rng: np.random.Generator) -> PulseSequence:
    if problem.initial is not None:
        return problem.initial
    cands = [random_pulse(problem.n, problem.T, problem.M, problem.amp_bounds, rng, problem.sigma)
             for _ in range(max(1, problem.restarts))]
    samples = np.stack([c.samples for c in cands])
    scores = _row_objective(samples, problem.models)
    return cands[int(np.argmax(scores))]


@dataclass
class OptimizationResult:
    pulse: PulseSequence
    objective: float
    history: np.ndarray
    trace: list = field(default_factory=list)


def optimize(problem: DiscriminationProblem, keep_trace: bool = False) -> OptimizationResult:
    """
    Projected ascent on the pulse amplitudes and centers.

    ``history[i]`` is the best objective seen up to iteration ``i`` (entry 0 is
    the starting pulse). With ``keep_trace`` every visited iterate is kept so
    callers can check feasibility.
    """
    rng = np.random.default_rng(problem.seed)
    if problem.N == 1:
        p = problem.initial or zero_pulse(problem.n, problem.T, problem.M, problem.sigma)
        return OptimizationResult(p, 0.0, np.zeros(1), [p] if keep_trace else [])
    start = _initial_pulse(problem, rng)
    A, mu = _project(np.array(start.amplitudes), np.array(start.centers), problem)
    lo, hi = problem.amp_bounds
    lr_A = 0.01 * (hi - lo) / 2 if problem.lr_amplitude is None else problem.lr_amplitude
    lr_mu = 0.1 * problem.sigma if problem.lr_center is None else problem.lr_center
    t = grid_times(problem.T, problem.M)
    trace = []
    best = (-np.inf, A, mu)
    history = []
    adam = Adam(lr={"A": lr_A, "mu": lr_mu})
    # SPSA perturbation sizes and gain, relative to the parameter scales
    c_A, c_mu = 0.05 * (hi - lo) / 2, 0.2 * problem.sigma
    for it in range(problem.iterations + 1):
        samples = gaussian_train(A, mu, problem.sigma, t)[None]
        if problem.method == "adam":
            value, gs = _row_objective(samples, problem.models, with_grad=True)
            value = float(value[0])
        else:
            value = float(_row_objective(samples, problem.models)[0])
        if keep_trace:
            trace.append(PulseSequence(A, mu, problem.sigma, problem.T, problem.M))
        if value > best[0]:
            best = (value, A.copy(), mu.copy())
        history.append(best[0])
        if it == problem.iterations:
            break
        if problem.method == "adam":
            gA, gmu = parameter_gradient(A, mu, problem.sigma, problem.T, problem.M, gs[0])
        else:
            gA, gmu = _spsa_gradient(A, mu, problem, rng, t, c_A, c_mu)
        params = {"A": A, "mu": mu}
        adam.step(params, {"A": gA, "mu": gmu}, sign=1.0)
        A, mu = _project(params["A"], params["mu"], problem)
        if (it + 1) % 100 == 0:
            log.info("pulse ascent iter %d: objective %.6f (best %.6f)", it + 1, value, best[0])
    _, A, mu = best
    pulse = PulseSequence(A, mu, problem.sigma, problem.T, problem.M)
    check_geometry(pulse.centers, pulse.sigma, pulse.T)
    return OptimizationResult(pulse, objective(pulse, problem), np.asarray(history), trace)


def _spsa_gradient(A, mu, problem, rng, t, c_A, c_mu):
    """Two-sided simultaneous-perturbation estimate, averaged over a few directions."""
    n = A.size
    gA, gmu = np.zeros(n), np.zeros(n)
    reps = 4
    for _ in range(reps):
        dA = rng.choice([-1.0, 1.0], n)
        dmu = rng.choice([-1.0, 1.0], n)
        plus = gaussian_train(A + c_A * dA, mu + c_mu * dmu, problem.sigma, t)
        minus = gaussian_train(A - c_A * dA, mu - c_mu * dmu, problem.sigma, t)
        fp, fm = _row_objective(np.stack([plus, minus]), problem.models)
        gA += (fp - fm) / (2 * c_A) * dA
        gmu += (fp - fm) / (2 * c_mu) * dmu
    return gA / reps, gmu / reps


def min_feature_separation(p: PulseSequence, models) -> float:
    """Smallest Euclidean distance between the models' predicted feature vectors for ``p``."""
    F = np.stack([gb.predict(m, p.samples)[0] for m in models])
    return min(np.linalg.norm(F[i] - F[j]) for i, j in _pairs(len(models)))
