"""Experiment configuration: JSON file plus ``key=value`` overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable

from colab.asymptotics import EpsGrid
from colab.representatives import SeriesTruncation


class ConfigError(ValueError):
    """Usage error; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = ""
    eps_min: float | None = None  # None: the experiment's own default window
    eps_max: float | None = None
    eps_n: int | None = None
    q: int | None = None
    n_points: int = 2048
    K_samples: int = 21
    lambda_samples: int | None = None
    k_max: int = 25
    tail_tol: float = 1e-14
    output_dir: str = ""
    seedless: bool = True

    def eps_grid(self, eps_min: float, eps_max: float, n: int) -> EpsGrid:
        """The configured grid, with unset fields taken from the given defaults."""
        return EpsGrid(
            self.eps_min if self.eps_min is not None else eps_min,
            self.eps_max if self.eps_max is not None else eps_max,
            self.eps_n if self.eps_n is not None else n,
        )

    def truncation(self) -> SeriesTruncation:
        return SeriesTruncation(self.k_max, self.tail_tol)

    def echo(self) -> dict:
        return asdict(self)


_RANGES = {
    "eps_min": (0.0, 1.0),
    "eps_max": (0.0, 1.0),
    "eps_n": (8, 400),
    "q": (1, 8),
    "n_points": (64, 65536),
    "K_samples": (1, 201),
    "lambda_samples": (2, 201),
    "k_max": (5, 60),
    "tail_tol": (0.0, 1e-3),
}
_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value):
    kind = _TYPES[key]
    try:
        if value is None and "None" in kind:
            return None
        if "int" in kind:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if "float" in kind:
            return float(value)
        if kind == "bool":
            if isinstance(value, str):
                if value.lower() not in ("true", "false"):
                    raise ValueError
                return value.lower() == "true"
            return bool(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {value!r}") from None


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    for key, (lo, hi) in _RANGES.items():
        v = getattr(cfg, key)
        if v is None:
            continue
        ok = lo < v <= hi if key in ("eps_min", "eps_max", "tail_tol") else lo <= v <= hi
        if not ok:
            raise ConfigError(f"{key} out of range: {v!r}")
    if cfg.n_points % 2:
        raise ConfigError("n_points must be even")
    if cfg.eps_min is not None and cfg.eps_max is not None and cfg.eps_min >= cfg.eps_max:
        raise ConfigError("eps_min must be < eps_max")
    if not cfg.seedless:
        raise ConfigError("seedless is fixed to true")
    return cfg


def _parse_override(item: str) -> tuple[str, str]:
    key, sep, value = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override must look like key=value: {item!r}")
    return key, value.strip()


def parse_config(
    path: str | os.PathLike | None = None,
    overrides: Iterable[str] | dict | None = None,
    **base,
) -> ExperimentConfig:
    """Read an optional JSON file, then apply overrides (CLI wins over file)."""
    values: dict = dict(base)
    if path is not None:
        text = Path(path).read_text()
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed config file: {exc}") from None
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
            values.update(data)
    if overrides:
        items = overrides.items() if isinstance(overrides, dict) else map(_parse_override, overrides)
        for key, value in items:
            if isinstance(value, str) and value.lower() in ("none", "null"):
                value = None
            values[key] = value
    unknown = sorted(set(values) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    cfg = replace(ExperimentConfig(), **{k: _coerce(k, v) for k, v in values.items()})
    return _validate(cfg)
