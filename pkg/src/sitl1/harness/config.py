"""Experiment configuration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from ..errors import ConfigError

__all__ = ["METHODS", "REGRESSION_KINDS", "ExperimentConfig", "load_config"]

METHODS = ("sit", "lad", "reweighted")

# experiment names that select the fixed-size regression generator; every
# other name uses the two-block detection generator
REGRESSION_KINDS = {"regression_uniform": "uniform", "regression_tailored": "tailored"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: instance sizes, error model, method settings, output file.

    ``sigma`` of ``None`` means ``sqrt(n) * noise_std``; a positive sigma makes
    the SIT method solve the noise-aware (BPDN) reduced problem.
    """

    name: str = "detection"
    n: int = 64
    r: int = 8
    k: int = 14
    s: int = 9
    t_fraction: float = 1.0
    error_magnitude: float = 10.0
    noise_std: float = 0.0
    eps: float = 0.2
    sigma: float | None = None
    snbr: int = 100
    trials: int = 50
    seed: int = 0
    methods: tuple = METHODS
    out_path: str = "results/detection.csv"

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods must not repeat")
        if self.is_regression and (self.n, self.r) != (52, 2):
            raise ConfigError("regression experiments use n = 52, r = 2")
        if not (self.r >= 1 and self.r < self.n):
            raise ConfigError("need 1 <= r < n")
        if not (0 <= self.s < self.n):
            raise ConfigError("need 0 <= s < n")
        if not (0 <= self.k <= self.n):
            raise ConfigError("need 0 <= k <= n")
        if not 0.0 <= self.t_fraction <= 1.0:
            raise ConfigError("t_fraction must lie in [0, 1]")
        if self.trials < 1 or self.snbr < 1:
            raise ConfigError("trials and snbr must be at least 1")
        if self.eps < 0 or self.noise_std < 0 or (self.sigma is not None and self.sigma < 0):
            raise ConfigError("eps, noise_std and sigma must be nonnegative")

    @property
    def is_regression(self) -> bool:
        return self.name in REGRESSION_KINDS

    @property
    def bpdn_sigma(self) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        return float(self.n) ** 0.5 * self.noise_std

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(data)
