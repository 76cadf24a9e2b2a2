"""Run configuration stored as an INI file with a single ``[run]`` section."""
from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .classifier.forest import ForestParams
from .tda_features import AmplitudeConfig

METHOD_CHOICES = ("tda", "lkc", "geotop", "all")


@dataclass(frozen=True)
class RunConfig:
    dataset: Path | None = None
    method: str = "all"
    n_thresholds: int = 200
    rounds: int = 500
    train_frac: float = 0.8
    seed: int = 0
    out: Path = Path("out")
    trees: int = 100
    min_samples_leaf: int = 1
    jobs: int = 1
    amplitude_p: float = 2.0
    amplitude_bins: int = 100
    amplitude_sigma: float = 0.1
    landscape_layers: int = 1
    silhouette_power: float = 1.0

    def __post_init__(self):
        if self.method not in METHOD_CHOICES:
            raise ValueError(f"method must be one of {METHOD_CHOICES}")
        if self.n_thresholds < 2:
            raise ValueError("n_thresholds must be >= 2")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 < self.train_frac < 1:
            raise ValueError("train_frac must lie in (0, 1)")
        if self.trees < 1 or self.min_samples_leaf < 1 or self.jobs == 0:
            raise ValueError("trees and min_samples_leaf must be >= 1 and jobs non-zero")
        if self.dataset is not None:
            object.__setattr__(self, "dataset", Path(self.dataset))
        object.__setattr__(self, "out", Path(self.out))
        # validates the amplitude knobs
        self.amplitude_config()

    @property
    def methods(self) -> tuple[str, ...]:
        return ("tda", "lkc", "geotop") if self.method == "all" else (self.method,)

    def amplitude_config(self) -> AmplitudeConfig:
        return AmplitudeConfig(p=self.amplitude_p, n_bins=self.amplitude_bins, sigma=self.amplitude_sigma,
                               n_layers=self.landscape_layers, power=self.silhouette_power)

    def forest_params(self) -> ForestParams:
        return ForestParams(n_trees=self.trees, min_samples_leaf=self.min_samples_leaf, seed=self.seed)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def to_ini(self) -> str:
        lines = ["[run]"]
        for key, value in asdict(self).items():
            if value is None:
                continue
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_ini())

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.read_string(text)
        if not parser.has_section("run"):
            raise ValueError("config file needs a [run] section")
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in parser.items("run"):
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RunConfig":
        return cls.from_ini(Path(path).read_text())


_INT_KEYS = {"n_thresholds", "rounds", "seed", "trees", "min_samples_leaf", "jobs", "amplitude_bins",
             "landscape_layers"}
_FLOAT_KEYS = {"train_frac", "amplitude_p", "amplitude_sigma", "silhouette_power"}


def _coerce(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in ("dataset", "out"):
        return Path(raw)
    return raw
