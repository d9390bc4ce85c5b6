"""
Acceptance criteria 1-10 at desk scale.

Each test records one PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion still reports its measured values.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, SEED
from oracles import SIGMA_0, measurement_distance_identity, overlap_integral
from spectator import graybox as gb
from spectator import optimizer as opt
from spectator import pipeline
from spectator import quantum as q
from spectator.harness import summarize
from spectator.noise import generate, periodogram, profile_spec, psd_eval
from test_analytic import N1_OVERLAP_T1, gaussian_free_evolution

pytestmark = pytest.mark.slow


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def random_trajectory(rng, M, amp=100.0):
    f = amp * np.sin(2 * np.pi * rng.uniform(0.5, 4) * np.arange(M) / M + rng.uniform(0, 6.3))
    beta = rng.normal(0, 3.0, M)
    ctrl = q.HamiltonianTrajectory(0.5 * f[:, None, None] * q.SIGMA_X + 6.0 * q.SIGMA_Z, 1.0 / M)
    return ctrl, q.dephasing_trajectory(beta, 1.0 / M)


def test_criterion_01_quantum_core():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        ctrl, noise = random_trajectory(rng, int(rng.integers(1, 65)))
        worst = max(worst, q.unitarity_error(q.time_ordered_unitary(ctrl + noise)),
                    q.unitarity_error(q.modified_interaction_unitary(ctrl, noise)))

    ctrl, noise = random_trajectory(np.random.default_rng(2), 2 ** 14)
    UI, U0 = q._interaction_and_control(ctrl, noise)
    fact = float(np.linalg.norm(U0 @ UI - q.time_ordered_unitary(ctrl + noise)))

    # left-endpoint sampling of a smooth drive: error against a fine reference
    def drive(M):
        t = np.arange(M) / M
        H = 0.5 * 40 * np.cos(2 * np.pi * t)[:, None, None] * q.SIGMA_X + 6.0 * q.SIGMA_Z
        return q.time_ordered_unitary(q.HamiltonianTrajectory(H, 1.0 / M))

    ref = drive(2 ** 17)
    Ms = np.array([256, 512, 1024, 2048, 4096])
    errs = np.array([np.linalg.norm(drive(M) - ref) for M in Ms])
    order = -np.polyfit(np.log(Ms), np.log(errs), 1)[0]
    dt = time.perf_counter() - t0
    record(1, worst < 1e-10 and fact < 1e-6 and abs(order - 1) <= 0.15 and dt < 60,
           f"unitarity {worst:.1e}, factorization {fact:.1e} at M=2^14, order {order:.3f}, {dt:.1f}s")


def test_criterion_02_gradient_contract(desk):
    t0 = time.perf_counter()
    cfg = desk.cfg
    ds = pipeline.characterize(cfg, "N1", SEED)
    init = gb.GrayboxModel.initialize(1.0, cfg.simulation.M, cfg.simulation.omega, desk.model("N1").basis,
                                      8, rng=np.random.default_rng(3), learning_rate=0.05)
    model, _ = gb.train(init, ds, iterations=20, log_every=0)
    X, Y = ds.samples, ds.features
    _, g = gb.gradients(model, X, Y)
    rng = np.random.default_rng(4)
    coords = [("w_tilde", (int(i),)) for i in rng.choice(8, 4, replace=False)]
    coords += [("beta_hat", (int(rng.integers(8)), int(rng.integers(cfg.simulation.M)))) for _ in range(20)]
    worst = 0.0
    for name, idx in coords:
        p = model.params[name]
        old = p[idx]
        h = 1e-5 * max(abs(old), 1.0)
        p[idx] = old + h
        up = gb.loss(model, X, Y)
        p[idx] = old - h
        down = gb.loss(model, X, Y)
        p[idx] = old
        fd = (up - down) / (2 * h)
        worst = max(worst, abs(fd - g[name][idx]) / max(abs(fd), abs(g[name][idx]), 1e-12))
    dt = time.perf_counter() - t0
    record(2, worst < 1e-4 and dt < 120,
           f"max relative FD error {worst:.1e} over {len(coords)} coordinates (M=128, K_model=8), {dt:.1f}s")


def test_criterion_03_graybox_learning(desk):
    lines, ok = [], True
    for k in ("N0", "N1", "N2", "N3", "N4", "N5"):
        desk.model(k)
        h = desk.histories[k]
        train, test = np.asarray(h["train"]), np.asarray(h["test"])
        windows = train[: train.size // 50 * 50].reshape(-1, 50).mean(axis=1)
        mono = bool(np.all(np.diff(windows) < 0))
        ratio = test[-1] / train[-1]
        good = mono and ratio < 10 and (k != "N0" or test[-1] < 1e-4)
        ok &= good
        lines.append(f"{k}: train {train[-1]:.1e} test {test[-1]:.1e}{'' if mono else ' (non-monotone)'}")
    total = sum(desk.seconds.values())
    record(3, ok and total < 600, f"{'; '.join(lines)}; {total:.0f}s")


def test_criterion_04_noise_generators():
    t0 = time.perf_counter()
    M = 1024
    worst, peaks = 0.0, []
    est = {}
    for kind in ("N1", "N5"):
        r = generate(profile_spec(kind), 10000, M, 1.0, 21)
        f, P = periodogram(r.values, r.dt)
        est[kind] = P.mean(axis=0)
        band = (f >= 1) & (f <= 50)
        worst = max(worst, np.max(np.abs(est[kind][band] / psd_eval(profile_spec(kind), f[band]) - 1)))
    grid = np.linspace(0, 128, 4097)
    exact = np.abs(psd_eval(profile_spec("N1"), grid) - psd_eval(profile_spec("N5"), grid))
    peaks.append(grid[np.argmax(exact)])
    # bump std is 5; three stds from a center the bump is down to exp(-4.5) ~ 1.1% of its peak
    outside = exact[(grid < 15) | (grid > 55)].max() / exact.max()
    diff = np.abs(est["N1"] - est["N5"])
    peaks.append(f[np.argmax(diff)])
    localized = all(20 <= p <= 50 for p in peaks) and outside < 0.02
    dt = time.perf_counter() - t0
    record(4, worst < 0.10 and localized and dt < 60,
           f"max periodogram error {100 * worst:.1f}% on [1,50]; N1/N5 deviation peaks at {peaks} "
           f"(outside [15,55]: {100 * outside:.2f}% of max), {dt:.1f}s")


def scenario_summary(desk, key, block=None):
    res, seconds = desk.scenario(key)
    return res, summarize(res.confusion, block), seconds


def test_criterion_05_scenario_1(desk):
    _, s, sec = scenario_summary(desk, 1)
    acc = s["per_class_accuracy"]
    secs = sec + sum(desk.seconds[k] for k in desk.cfg.scenario(1).profiles)
    record(5, s["mean_diagonal"] >= 90 and min(acc.values()) >= 80 and secs < 1200,
           f"mean diagonal {s['mean_diagonal']:.1f}%, per class "
           + ", ".join(f"{k} {v:.1f}" for k, v in acc.items()) + f"; {secs:.0f}s")


def test_criterion_06_scenario_2(desk):
    _, s, sec = scenario_summary(desk, 2, ["N1", "N5"])
    secs = sec + sum(desk.seconds[k] for k in desk.cfg.scenario(2).profiles)
    record(6, s["off_diagonal_outside_block"] <= 0.05 and s["block_confusion"] >= 0.10 and secs < 1200,
           f"off-diagonal mass outside (N1,N5) block {100 * s['off_diagonal_outside_block']:.1f}%, "
           f"block confusion {100 * s['block_confusion']:.1f}%; {secs:.0f}s")


def test_criterion_07_scenario_3(desk):
    _, s1, _ = scenario_summary(desk, 1)
    res, s3, sec = scenario_summary(desk, 3)
    gap = s1["mean_diagonal"] - s3["mean_diagonal"]
    secs = sec + sum(desk.seconds[k] for k in desk.cfg.scenario(3).profiles)
    record(7, gap >= 5 and np.all(np.abs(res.pulse.amplitudes) <= 1) and secs < 1200,
           f"mean diagonal {s3['mean_diagonal']:.1f}% vs {s1['mean_diagonal']:.1f}% unconstrained "
           f"(gap {gap:.1f} points); {secs:.0f}s")


def test_criterion_08_optimizer_properties(desk):
    res, _ = desk.scenario(1)
    history = res.optimization.history
    nondecreasing = bool(np.all(np.diff(history) >= 0))
    twin = desk.model("N1").copy()
    zero = opt.objective(res.pulse, opt.DiscriminationProblem([desk.model("N1"), twin]))
    models = [desk.model(k) for k in desk.cfg.scenario(3).profiles]
    prob = opt.DiscriminationProblem(models, amp_bounds=(-1, 1), iterations=desk.cfg.optimizer.iterations,
                                     restarts=desk.cfg.optimizer.restarts, seed=5)
    trace = opt.optimize(prob, keep_trace=True).trace
    feasible = all(np.all(np.abs(p.amplitudes) <= 1) for p in trace)
    record(8, nondecreasing and zero == 0.0 and feasible,
           f"history nondecreasing: {nondecreasing}; identical pair objective {zero}; "
           f"{len(trace)} Scenario-3 iterates feasible: {feasible}")


def test_criterion_09_analytic_oracles():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(1000):
        I1, I2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        rho = q.pure_state(rng.normal(size=2) + 1j * rng.normal(size=2))
        lhs, rhs = measurement_distance_identity(I1 * SIGMA_0, I2 * SIGMA_0, rho)
        worst = max(worst, abs(lhs - rhs))
    chi = overlap_integral(lambda f: psd_eval(profile_spec("N1"), f), 1.0, breakpoints=(15, 30))
    mean, se = gaussian_free_evolution(profile_spec("N1"), 20000, 128, 31)
    target = np.exp(-chi) * np.cos(12.0)
    z = abs(mean - target) / se
    record(9, worst < 1e-12 and z < 3 and chi == pytest.approx(N1_OVERLAP_T1, rel=1e-9),
           f"identity max gap {worst:.1e}; MC {mean:.4f} vs exp(-chi)cos(12T) {target:.4f} ({z:.2f} SE)")


def test_criterion_10_determinism(desk, tmp_path):
    res, _ = desk.scenario(1)
    first = res.confusion.to_csv().encode()
    out = tmp_path / "s1.csv"
    cmd = [sys.executable, "-m", "spectator.cli", "run-scenario", "--scenario", "1", "--desk-scale",
           "--seed", str(SEED), "--workdir", str(tmp_path / "work"), "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    same = proc.returncode == 0 and out.read_bytes() == first
    record(10, same, f"fresh CLI rerun (models retrained) exit {proc.returncode}; "
                     f"confusion CSV byte-identical: {same}")
