"""
Experiment configuration.

Defaults are the full-scale protocol values; :func:`desk_scale` shrinks the
grid and sample counts so an entire scenario runs in minutes. Configs load
from TOML files whose tables mirror the dataclass blocks, e.g.::

    [simulation]
    M = 256

    [profiles.scales]
    N2 = 2.0
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import asdict, dataclass, field

import tomli

from .noise import PROFILE_KINDS, NoiseProfileSpec, profile_spec


class ConfigError(ValueError):
    pass


@dataclass
class SimulationConfig:
    T: float = 1.0
    M: int = 1024
    omega: float = 12.0
    K_char: int = 2000
    K_test: int = 1000
    dataset_size: int = 10000
    pulse_count: int = 5
    amp_range: tuple = (-100.0, 100.0)


# the non-Gaussian and non-stationary profiles need more than unit variance to
# leave distinct fingerprints at T = 1
NOISE_SCALE = 4.5


def _default_scales():
    return {"N2": NOISE_SCALE, "N3": NOISE_SCALE, "N4": NOISE_SCALE}


@dataclass
class ProfilesConfig:
    scales: dict = field(default_factory=_default_scales)
    overrides: dict = field(default_factory=dict)

    def spec(self, kind: str) -> NoiseProfileSpec:
        if kind not in PROFILE_KINDS:
            raise ConfigError(f"unknown profile {kind!r}; valid ids: {', '.join(PROFILE_KINDS)}")
        kw = dict(self.overrides.get(kind, {}))
        if kind in self.scales:
            kw["scale"] = self.scales[kind]
        try:
            return profile_spec(kind, **kw)
        except TypeError as exc:
            raise ConfigError(f"bad override for {kind}: {exc}") from None


@dataclass
class ScenarioConfig:
    profiles: list
    amp_bounds: tuple = (-100.0, 100.0)


def _default_scenarios():
    return {
        "1": ScenarioConfig(["N0", "N1", "N2", "N3", "N4"]),
        "2": ScenarioConfig(["N5", "N1", "N2", "N3", "N4"]),
        "3": ScenarioConfig(["N0", "N1", "N2", "N3", "N4"], (-1.0, 1.0)),
    }


@dataclass
class GrayboxConfig:
    K_model: int = 32
    iterations: int = 1000
    test_fraction: float = 0.1
    learning_rate: float = 1e-2
    init_std_factor: float = 0.1


@dataclass
class OptimizerConfig:
    iterations: int = 500
    restarts: int = 64
    method: str = "adam"


@dataclass
class ClassifierConfig:
    R: int = 10000
    dither_std: float = 0.05
    iterations: int = 500
    split: float = 0.1
    learning_rate: float = 1e-2


@dataclass
class HarnessConfig:
    L: int = 10000


@dataclass
class ExperimentConfig:
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    profiles: ProfilesConfig = field(default_factory=ProfilesConfig)
    scenarios: dict = field(default_factory=_default_scenarios)
    graybox: GrayboxConfig = field(default_factory=GrayboxConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def scenario(self, key) -> ScenarioConfig:
        try:
            return self.scenarios[str(key)]
        except KeyError:
            raise ConfigError(f"unknown scenario {key!r}; valid: {', '.join(self.scenarios)}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def desk_scale(cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    """
    Small preset: M=128, K_char=400, K_test=200, 500 examples, R=1000, L=1000.

    The graybox uses 16 realizations and a larger step (0.05) so it fits the
    reduced datasets within 1000 iterations.
    """
    cfg = ExperimentConfig() if cfg is None else cfg
    cfg.simulation.M = 128
    cfg.simulation.K_char = 400
    cfg.simulation.K_test = 200
    cfg.simulation.dataset_size = 500
    cfg.classifier.R = 1000
    cfg.harness.L = 1000
    cfg.graybox.K_model = 16
    cfg.graybox.learning_rate = 0.05
    return cfg


def _fill(obj, table: dict, where: str):
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in table.items():
        if key not in names:
            raise ConfigError(f"unknown key {where}.{key}; expected one of {sorted(names)}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}.{key} must be a table")
            _fill(current, value, f"{where}.{key}")
        elif isinstance(current, tuple):
            setattr(obj, key, tuple(float(v) for v in value))
        elif isinstance(current, bool) or not isinstance(current, (int, float)):
            setattr(obj, key, value)
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{where}.{key} must be a number")
            setattr(obj, key, type(current)(value))


def _validate(cfg: ExperimentConfig) -> None:
    s = cfg.simulation
    checks = [
        (s.T > 0, "simulation.T must be positive"),
        (s.M >= 1, "simulation.M must be at least 1"),
        (s.K_char >= 1 and s.K_test >= 1, "realization counts must be positive"),
        (s.dataset_size >= 1, "simulation.dataset_size must be positive"),
        (cfg.graybox.K_model >= 1, "graybox.K_model must be positive"),
        (0 <= cfg.graybox.test_fraction < 1, "graybox.test_fraction must be in [0, 1)"),
        (0 <= cfg.classifier.split < 1, "classifier.split must be in [0, 1)"),
        (cfg.classifier.R >= 1, "classifier.R must be positive"),
        (cfg.classifier.dither_std >= 0, "classifier.dither_std must be non-negative"),
        (cfg.harness.L >= 1, "harness.L must be positive"),
        (cfg.optimizer.method in ("adam", "spsa"), "optimizer.method must be 'adam' or 'spsa'"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    for key, sc in cfg.scenarios.items():
        for kind in sc.profiles:
            cfg.profiles.spec(kind)
        if not sc.amp_bounds[0] < sc.amp_bounds[1]:
            raise ConfigError(f"scenario {key}: amplitude bounds need lo < hi")
    for kind in set(cfg.profiles.scales) | set(cfg.profiles.overrides):
        cfg.profiles.spec(kind)


def from_dict(table: dict, desk: bool = False) -> ExperimentConfig:
    cfg = desk_scale() if desk else ExperimentConfig()
    table = dict(table)
    scenarios = table.pop("scenarios", None)
    _fill(cfg, table, "config")
    if scenarios is not None:
        for key, sc in scenarios.items():
            if not isinstance(sc, dict) or "profiles" not in sc:
                raise ConfigError(f"scenarios.{key} needs a profiles list")
            bounds = tuple(float(v) for v in sc.get("amp_bounds", (-100.0, 100.0)))
            cfg.scenarios[str(key)] = ScenarioConfig(list(sc["profiles"]), bounds)
    cfg.simulation.amp_range = tuple(cfg.simulation.amp_range)
    _validate(cfg)
    return cfg


def load(path=None, desk: bool = False) -> ExperimentConfig:
    """Read a TOML config (or the defaults when ``path`` is None)."""
    if path is None:
        cfg = desk_scale() if desk else ExperimentConfig()
        _validate(cfg)
        return cfg
    try:
        with open(path, "rb") as fh:
            table = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(table, desk)


def from_manifest(data: dict) -> ExperimentConfig:
    """Rebuild a config from ``to_dict`` output stored in a manifest."""
    data = json.loads(json.dumps(data))
    scenarios = data.pop("scenarios", {})
    cfg = from_dict(data)
    cfg.scenarios = {k: ScenarioConfig(list(v["profiles"]), tuple(v["amp_bounds"]))
                     for k, v in scenarios.items()}
    return cfg
