"""Experiment configuration: defaults, presets, YAML loading and validation."""

import copy
import inspect
import math
from dataclasses import asdict, dataclass, field, fields

import yaml

from .baselines import BaselineConfig
from .exceptions import ParameterError
from .tasks import get_family


class ConfigError(ParameterError):
    """The experiment configuration is invalid."""


DEFAULT_GENERATORS = {
    "QuadraticBowl": {"center_mean": 3.0, "center_spread": 1.0, "task_noise": 0.5, "layout": "cluster"},
    "SineRegression": {"amplitude_range": [0.1, 5.0], "phase_range": [0.0, math.pi], "task_noise": 0.0},
}

# Streams used for the baseline comparison: a tight cluster of task centres
# observed through noisy train data, and centres flipping between +mu and -mu.
PRESETS = {
    "default": {},
    "clustered": {
        "T": 100,
        "generator": {"center_mean": 3.0, "center_spread": 0.3, "task_noise": 1.0, "layout": "cluster"},
    },
    "antipodal": {
        "T": 100,
        "generator": {"center_mean": 3.0, "center_spread": 0.3, "task_noise": 0.3, "layout": "antipodal"},
    },
    "sine": {"family": "SineRegression", "dim": 1, "domain_radius": 6.0, "sigma": 0.5},
}


@dataclass
class ExperimentConfig:
    T: int = 200
    m: int | None = None
    family: str = "QuadraticBowl"
    dim: int = 5
    domain_radius: float = 10.0
    generator: dict = field(default_factory=dict)
    alpha: float = 0.1
    eta: float = 1.0
    b1: float = 1.0
    sigma: float = 0.5
    delta: float = 0.1
    seeds: list = field(default_factory=lambda: [0])
    w_init: list | None = None
    inner_mode: str = "exact"
    batch_size: int | None = None
    baselines: list = field(default_factory=lambda: [{"kind": "TFS"}, {"kind": "TOE"}])
    output_dir: str = "runs/default"
    stream_file: str | None = None
    jobs: int = 1

    def validate(self):
        """Fill derived defaults and check invariants; returns ``self``."""
        def positive_int(name):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")

        def positive(name):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
                raise ConfigError(f"{name} must be > 0, got {value!r}")

        positive_int("T")
        positive_int("dim")
        positive_int("jobs")
        if self.m is None:
            self.m = max(1, math.ceil(self.T / 4))
        positive_int("m")
        if self.m > self.T:
            raise ConfigError(f"m={self.m} must satisfy 1 <= m <= T={self.T}")
        for name in ("domain_radius", "alpha", "eta", "b1"):
            positive(name)
        if not isinstance(self.sigma, (int, float)) or self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma!r}")
        if not isinstance(self.delta, (int, float)) or not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta!r}")
        try:
            self.family = get_family(self.family).name
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        self.generator = {**DEFAULT_GENERATORS[self.family], **(self.generator or {})}
        accepted = set(inspect.signature(get_family(self.family).generate).parameters) - {
            "rng", "dim", "radius"}
        unknown = set(self.generator) - accepted
        if unknown:
            raise ConfigError(f"generator key(s) {sorted(unknown)} not accepted by {self.family}")
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigError(f"seeds must be a nonempty list of nonnegative integers, got {self.seeds!r}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.inner_mode not in ("exact", "sampled"):
            raise ConfigError(f"inner_mode must be 'exact' or 'sampled', got {self.inner_mode!r}")
        try:
            self.baseline_configs()
        except (ParameterError, TypeError) as exc:
            raise ConfigError(f"bad baseline entry: {exc}") from None
        return self

    def baseline_configs(self):
        return [BaselineConfig(**entry) for entry in self.baselines]

    def to_dict(self):
        return asdict(self)


def build_config(preset="default", source=None, overrides=None):
    """Merge preset, a config mapping (e.g. parsed YAML) and overrides, then validate.

    Later layers win; the ``generator`` mapping is merged key by key.
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    known = {f.name for f in fields(ExperimentConfig)}
    merged = {}
    for layer in (PRESETS[preset], source or {}, overrides or {}):
        if not isinstance(layer, dict):
            raise ConfigError("configuration must be a mapping of keys to values")
        unknown = set(layer) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        for key, value in copy.deepcopy(layer).items():
            if key == "generator" and isinstance(value, dict):
                merged["generator"] = {**merged.get("generator", {}), **value}
            elif value is not None:
                merged[key] = value
    return ExperimentConfig(**merged).validate()


def load_config(path, preset="default", overrides=None):
    try:
        with open(path) as fh:
            source = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return build_config(preset, source, overrides)


def dump_config(config, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)
