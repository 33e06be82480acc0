"""Flat key-value experiment configuration (YAML syntax, no nesting)."""
from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import yaml

from .registry import get_entry

SEED_ENV = "COMPOSOPT_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Documented keys; anything else in a config file is an error.

    ``algorithm`` (scgm | pagm) and ``problem`` are required. SCGM needs
    ``delta`` and ``epsilon`` (or ``epsilons`` for scaling studies). PAGM
    needs ``mu``, ``t`` and either ``K`` or ``epsilon`` (the latter evaluates
    the theorem budget from oracle initial gaps). ``H_max``, ``C`` and ``C1``
    override problem defaults.
    """

    algorithm: str
    problem: str
    d: Optional[int] = None
    m: Optional[int] = None
    problem_seed: int = 0
    delta: Optional[float] = None
    epsilon: Optional[float] = None
    epsilons: Optional[tuple] = None
    mu: Optional[float] = None
    t: Optional[float] = None
    K: Optional[int] = None
    seed: int = 0
    trajectories: int = 1
    verify: bool = False
    start: str = "default"
    out: str = "results"
    H_max: Optional[float] = None
    C: Optional[float] = None
    C1: Optional[float] = None
    record_time: bool = False

    def __post_init__(self):
        if self.algorithm not in ("scgm", "pagm"):
            raise ConfigError(f"algorithm must be 'scgm' or 'pagm', got {self.algorithm!r}")
        try:
            entry = get_entry(self.problem)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        if entry.algorithm != self.algorithm:
            raise ConfigError(f"problem {self.problem!r} is a {entry.algorithm} problem")
        if self.trajectories < 1:
            raise ConfigError("trajectories must be at least 1")
        if self.start not in ("default", "origin", "random"):
            raise ConfigError("start must be one of default, origin, random")
        if self.epsilons is not None:
            object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if self.algorithm == "scgm":
            if self.delta is None or (self.epsilon is None and not self.epsilons):
                raise ConfigError("scgm needs delta and epsilon (or epsilons)")
            for k in ("mu", "t", "K", "C1", "C"):
                if getattr(self, k) is not None:
                    raise ConfigError(f"key {k!r} does not apply to scgm")
        else:
            if self.mu is None or self.t is None:
                raise ConfigError("pagm needs mu and t")
            if self.K is None and self.epsilon is None:
                raise ConfigError("pagm needs K or epsilon")
            if self.K is not None and self.K < 1:
                raise ConfigError("K must be at least 1")
            if self.delta is not None or self.H_max is not None:
                raise ConfigError("delta and H_max do not apply to pagm")


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def config_from_mapping(data: dict, env=None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat mapping of keys to values")
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in data.items():
        if isinstance(v, dict) or (isinstance(v, list) and k != "epsilons"):
            raise ConfigError(f"key {k!r}: nested values are not allowed")
    data = dict(data)
    env = os.environ if env is None else env
    if env.get(SEED_ENV, "") != "":
        try:
            data["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, env=None) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(data, env)
