"""
The four protocol stages as plain functions, plus a scenario driver.

Every stage draws its randomness from ``subseed(master_seed, <stage>, <label>)``.
Characterization and graybox seeds depend on the profile only, so datasets and
models are shared between scenarios that use the same profile.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classifier as cl
from . import graybox as gb
from . import harness, store
from .config import ExperimentConfig
from .optimizer import DiscriminationProblem, OptimizationResult, optimize
from .pulses import PulseSequence
from .seeding import subseed
from .simulator import CharacterizationSet, PulsePolicy, build_dataset, default_basis

log = logging.getLogger(__name__)


def characterize(cfg: ExperimentConfig, profile: str, seed: int) -> CharacterizationSet:
    s = cfg.simulation
    spec = cfg.profiles.spec(profile)
    policy = PulsePolicy(n=s.pulse_count, amp_range=tuple(s.amp_range))
    return build_dataset(spec, s.dataset_size, s.K_char, default_basis(), policy,
                         subseed(seed, "characterize", profile), T=s.T, M=s.M, omega=s.omega)


def train_graybox(cfg: ExperimentConfig, dataset: CharacterizationSet, seed: int, basis=None):
    g, s = cfg.graybox, cfg.simulation
    basis = default_basis() if basis is None else basis
    init = gb.GrayboxModel.initialize(
        dataset.T, dataset.M, s.omega, basis, g.K_model, g.init_std_factor * s.omega,
        np.random.default_rng(subseed(seed, "graybox", dataset.profile)), g.learning_rate,
        dataset.profile)
    return gb.train(init, dataset, g.test_fraction, g.iterations,
                    subseed(seed, "split", dataset.profile))


def optimize_pulse(cfg: ExperimentConfig, models, scenario, seed: int) -> OptimizationResult:
    sc = cfg.scenario(scenario)
    o = cfg.optimizer
    problem = DiscriminationProblem(list(models), sc.amp_bounds, cfg.simulation.pulse_count,
                                    iterations=o.iterations, seed=subseed(seed, "optimize", str(scenario)),
                                    restarts=o.restarts, method=o.method)
    return optimize(problem)


def class_features(models, pulse: PulseSequence) -> np.ndarray:
    """Graybox-predicted features of ``pulse`` for each model, (N, S)."""
    return np.stack([gb.predict(m, pulse.samples)[0] for m in models])


def train_classifier(cfg: ExperimentConfig, models, pulse: PulseSequence, seed: int):
    c = cfg.classifier
    labels = [m.profile for m in models]
    tag = "-".join(labels)
    X, Y, _ = cl.build_dither_set(class_features(models, pulse),
                                  cl.DitherConfig(c.R, c.dither_std, subseed(seed, "dither", tag)))
    return cl.train_classifier(X, Y, split=c.split, iterations=c.iterations,
                               learning_rate=c.learning_rate, seed=subseed(seed, "classifier", tag),
                               class_names=labels)


def run_test(cfg: ExperimentConfig, profiles, pulse: PulseSequence, clf, seed: int):
    specs = [cfg.profiles.spec(k) for k in profiles]
    return harness.run_test(specs, pulse, clf, cfg.harness.L, cfg.simulation.K_test,
                            subseed(seed, "test", "-".join(profiles)), default_basis(),
                            cfg.simulation.omega, labels=list(profiles))


@dataclass
class ScenarioResult:
    scenario: str
    models: list
    pulse: PulseSequence
    optimization: OptimizationResult
    classifier: object
    confusion: harness.ConfusionMatrix


def cached_model(cfg: ExperimentConfig, profile: str, seed: int, workdir: Path | None):
    """Train (or load from ``workdir``) the graybox model for one profile."""
    if workdir is not None:
        mdir = Path(workdir) / f"graybox_{profile}"
        mf = mdir / "manifest.json"
        if mf.exists():
            model, history, m = store.load_graybox(mdir)
            if m.get("config_hash") == cfg.hash() and m.get("seed") == seed:
                return model, history
    ds = characterize(cfg, profile, seed)
    model, history = train_graybox(cfg, ds, seed)
    if workdir is not None:
        meta = {"config_hash": cfg.hash(), "seed": seed, "command": "run-scenario",
                "config": cfg.to_dict()}
        store.save_dataset(Path(workdir) / f"dataset_{profile}", ds, default_basis(), meta)
        store.save_graybox(mdir, model, history, meta)
    return model, history


def run_scenario(cfg: ExperimentConfig, scenario, seed: int, workdir=None) -> ScenarioResult:
    sc = cfg.scenario(scenario)
    models = [cached_model(cfg, k, seed, workdir)[0] for k in sc.profiles]
    res = optimize_pulse(cfg, models, scenario, seed)
    clf, _ = train_classifier(cfg, models, res.pulse, seed)
    cm = run_test(cfg, sc.profiles, res.pulse, clf, seed)
    return ScenarioResult(str(scenario), models, res.pulse, res, clf, cm)
