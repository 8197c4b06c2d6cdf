"""Runtime configuration: thresholds, loss weights, fit-demo settings, profiles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .losses import LossWeights

__all__ = ["FitConfig", "Config", "PROFILES", "config_from_profile", "load_config"]


@dataclass(frozen=True)
class FitConfig:
    """Gradient-descent demo settings."""

    steps: int = 500
    lr: float = 0.05
    fd_step: float = 1e-5

    def __post_init__(self) -> None:
        if self.steps <= 0:
            raise ValueError(f"steps must be positive, got {self.steps}")
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.fd_step <= 0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")


@dataclass(frozen=True)
class Config:
    """Toolkit defaults; see PROFILES for per-dataset obliquity thresholds."""

    lambda_thr: float = 0.95
    nms_iou: float = 0.5
    match_iou: float = 0.5
    weights: LossWeights = field(default_factory=LossWeights)
    fit: FitConfig = field(default_factory=FitConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.lambda_thr < 1:
            raise ValueError(f"lambda_thr must lie in (0, 1), got {self.lambda_thr}")
        if not 0 < self.nms_iou <= 1:
            raise ValueError(f"nms_iou must lie in (0, 1], got {self.nms_iou}")
        if not 0 < self.match_iou < 1:
            raise ValueError(f"match_iou must lie in (0, 1), got {self.match_iou}")


# Best obliquity thresholds per dataset profile.
PROFILES: Mapping[str, float] = {
    "dota": 0.94,
    "hrsc": 0.92,
    "ucas": 0.96,
    "icdar": 0.91,
}


def config_from_profile(name: str, base: Config | None = None) -> Config:
    if name not in PROFILES:
        raise KeyError(f"unknown profile {name!r}; known: {sorted(PROFILES)}")
    return replace(base or Config(), lambda_thr=PROFILES[name])


def _config_from_dict(data: dict, base: Config) -> Config:
    kwargs: dict = {}
    plain = {"lambda_thr", "nms_iou", "match_iou", "seed"}
    unknown = set(data) - plain - {"weights", "fit"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in plain & set(data):
        kwargs[key] = data[key]
    if "weights" in data:
        kwargs["weights"] = LossWeights(**data["weights"])
    if "fit" in data:
        kwargs["fit"] = FitConfig(**data["fit"])
    return replace(base, **kwargs)


def load_config(path: str | Path, base: Config | None = None) -> Config:
    """Read a JSON config file and overlay it on the defaults (or ``base``)."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return _config_from_dict(data, base or Config())
