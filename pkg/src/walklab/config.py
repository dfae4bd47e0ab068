"""Experiment configuration: flat ``key = value`` files plus CLI overrides."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path


class ConfigError(ValueError):
    pass


DEFAULT_SEED = 1


@dataclass
class ExperimentConfig:
    experiment: str
    p: Fraction = Fraction(2, 3)
    n: int | None = None
    n_grid: tuple[int, ...] | None = None
    replicas: int | None = None
    seed: int = DEFAULT_SEED
    dt: float = 1e-4
    h: float = 0.02
    out: str = "walklab-out"
    workers: int = os.cpu_count() or 1
    p_values: tuple[Fraction, ...] = (Fraction(2, 3), Fraction(1, 2))
    mode: str = "conditional"

    def validate(self, registry=None) -> ExperimentConfig:
        if registry is not None and self.experiment not in registry:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"choose from {', '.join(sorted(registry))}")
        for p in (self.p, *self.p_values):
            if not (0 < p <= 1):
                raise ConfigError(f"p must lie in (0, 1], got {p}")
        for key in ("n", "replicas", "workers"):
            v = getattr(self, key)
            if v is not None and v <= 0:
                raise ConfigError(f"{key} must be positive, got {v}")
        if self.n_grid is not None and any(v < 0 for v in self.n_grid):
            raise ConfigError("n_grid entries must be nonnegative")
        if not (self.dt > 0 and self.h > 0):
            raise ConfigError("dt and h must be positive")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.mode not in ("conditional", "integral"):
            raise ConfigError(f"mode must be conditional or integral, got {self.mode!r}")
        return self

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d["p"] = str(self.p)
        d["p_values"] = [str(p) for p in self.p_values]
        d.pop("workers")  # scheduling only; never changes results
        return d


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        f = float(text)
        if not f.is_integer():
            raise ConfigError(f"expected an integer, got {text!r}") from None
        return int(f)


def _fraction(text: str) -> Fraction:
    try:
        f = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"expected a probability, got {text!r}") from None
    return f.limit_denominator(10**9)


_PARSERS = {
    "experiment": str,
    "p": _fraction,
    "n": _int,
    "n_grid": lambda s: tuple(_int(v) for v in s.split(",") if v.strip()),
    "replicas": _int,
    "seed": _int,
    "dt": float,
    "h": float,
    "out": str,
    "workers": _int,
    "p_values": lambda s: tuple(_fraction(v) for v in s.split(",") if v.strip()),
    "mode": str,
}


def parse_value(key: str, text: str):
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _PARSERS[key](text.strip())
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = parse_value(key, value)
    return values


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def build_config(experiment: str, file_values: dict | None = None, **overrides) -> ExperimentConfig:
    """File values first, then non-``None`` overrides (CLI flags) on top."""
    values = dict(file_values or {})
    file_exp = values.pop("experiment", None)
    if file_exp is not None and file_exp != experiment:
        raise ConfigError(f"config file is for {file_exp!r}, not {experiment!r}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(experiment=experiment, **values)
