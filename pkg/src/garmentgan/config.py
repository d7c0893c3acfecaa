"""Pipeline configuration: one flat dataclass, loadable from YAML/JSON with
strict key checking and `key=value` overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .core_data import ImageGeometry
from .errors import ConfigError


@dataclass
class PipelineConfig:
    # Geometry / architecture (desk-scale defaults; 256x192 uses depth 5, width 64).
    height: int = 64
    width: int = 48
    depth: int = 3
    base_width: int = 16
    disc_layers: int = 3
    disc_base_width: int = 32
    disc_scales: int = 2
    grid_size: int = 5
    align_downsamples: int = 4
    # Loss weights.
    gamma1: float = 15.0
    gamma2: float = 20.0
    gamma3: float = 10.0
    alpha1: float = 10.0
    alpha2: float = 10.0
    alpha3: float = 10.0
    alpha4: float = 10.0
    beta: float = 10.0
    gp_enabled: bool = True
    # Optimizer.
    lr: float = 2e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    batch_size: int = 4
    # Run control.
    seed: int = 0
    steps_shape: int = 2000
    steps_appearance: int = 2000
    checkpoint_every: int = 500
    log_every: int = 1
    pool_size: int = 256
    # Paths / data.
    data_root: str | None = None  # None -> procedural toy scenes
    checkpoint_dir: str = "checkpoints"
    # Recorded split sizes for the real dataset (metadata only at desk scale).
    train_split: int = 14221
    val_split: int = 2032

    def __post_init__(self):
        factor = 2**self.depth
        if self.height % factor or self.width % factor:
            raise ConfigError(
                f"{self.height}x{self.width} not divisible by 2^{self.depth}")
        ImageGeometry(self.height, self.width)
        if self.batch_size < 1 or self.pool_size < self.batch_size:
            raise ConfigError("pool_size must be >= batch_size >= 1")

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.height, self.width)

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        unknown = set(raw) - cls.field_names()
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        raw = yaml.safe_load(path.read_text())
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config root must be a mapping: {path}")
        return cls.from_dict(raw)

    def with_overrides(self, overrides: list[str]) -> "PipelineConfig":
        """Apply `key=value` strings; values parsed as YAML scalars."""
        raw = dataclasses.asdict(self)
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override must be key=value, got {item!r}")
            key, value = item.split("=", 1)
            if key not in self.field_names():
                raise ConfigError(f"unknown config key: {key}")
            parsed = yaml.safe_load(value)
            # YAML 1.1 wants a dot in scientific notation, so "2e-4" comes
            # back as a string; fall through to the field's declared type.
            hints = {f.name: f.type for f in dataclasses.fields(self)}
            if isinstance(parsed, str) and "float" in str(hints[key]):
                try:
                    parsed = float(parsed)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {value!r}") from exc
            raw[key] = parsed
        return PipelineConfig.from_dict(raw)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)
