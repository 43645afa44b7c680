"""JSON run configuration shared by the CLI subcommands. Unknown keys are rejected."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Union

from .classifier.training import TrainingConfig
from .features import FiltrationBank, get_bank
from .vectorize import SamplingConfig


class ConfigError(ValueError):
    pass


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    voxel_size: float = 0.05
    bank: Union[str, List[str]] = "MN40"
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    drop_essential: bool = False
    training: TrainingConfig = field(default_factory=TrainingConfig)
    workers: int = 1
    seed: int = 0
    mesh_points: int = 2048
    channels: Optional[List[int]] = None

    def __post_init__(self):
        if not isinstance(self.voxel_size, (int, float)) or not self.voxel_size > 0:
            raise ConfigError("voxel_size must be a positive number")
        if not isinstance(self.drop_essential, bool):
            raise ConfigError("drop_essential must be true or false")
        if int(self.workers) < 1 or int(self.mesh_points) < 1:
            raise ConfigError("workers and mesh_points must be positive")
        if self.channels is not None and (len(self.channels) != 3 or min(self.channels) < 1):
            raise ConfigError("channels must list three positive widths")
        try:
            get_bank(self.bank)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def filtration_bank(self) -> FiltrationBank:
        return get_bank(self.bank)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        unknown = sorted(set(data) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError(f"unknown key(s) in config: {', '.join(unknown)}")
        if "sampling" in data:
            data["sampling"] = _build(SamplingConfig, data["sampling"], "sampling")
        if "training" in data:
            data["training"] = _build(TrainingConfig, data["training"], "training")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sampling"]["wasserstein_orders"] = list(self.sampling.wasserstein_orders)
        d["sampling"]["landscape_layers"] = list(self.sampling.landscape_layers)
        return d

    def featurize_section(self) -> dict:
        """The part of the config that determines feature values."""
        d = self.to_dict()
        return {k: d[k] for k in ("voxel_size", "bank", "sampling", "drop_essential", "mesh_points", "seed")}
