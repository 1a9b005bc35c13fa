"""Run configuration: one YAML document, validated against dataclass schemas."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .floorsim import FloorModel, SensorChain
from .gaitsynth.dataset import Protocol
from .gaitsynth.templates import GaitType
from .numerics import ModalOscillator
from .pig.baseline import LstmConfig
from .pig.model import PigConfig


class ConfigError(ValueError):
    pass


@dataclass
class DatasetConfig:
    root: str = "data"
    subjects: int = 20
    normal_trials: int = 20
    abnormal_trials: int = 10
    gait_types: list = field(default_factory=lambda: [g.value for g in GaitType])
    n_cycles: int = 2
    workers: int = 0            # 0: one per available core

    def protocol(self) -> Protocol:
        return Protocol(self.subjects, self.normal_trials, self.abnormal_trials,
                        tuple(self.gait_types), self.n_cycles)


@dataclass
class FloorConfig:
    modes: list = field(default_factory=lambda: [
        {"modal_mass": 2000.0, "damping_ratio": 0.05, "natural_frequency": 12.0}])
    attenuation_alpha: float = 0.3
    wave_speed: float = 400.0
    sensor_positions: list = field(default_factory=lambda: [
        [0.0, 0.6], [2.0, -0.6], [4.0, 0.6], [6.0, -0.6]])
    noise_std: float = 2e-5

    def model(self) -> FloorModel:
        modes = []
        for i, m in enumerate(self.modes):
            if not isinstance(m, dict):
                raise ConfigError(f"floor.modes[{i}] must be a mapping")
            unknown = set(m) - {"modal_mass", "damping_ratio", "natural_frequency"}
            if unknown:
                raise ConfigError(f"unknown config key 'floor.modes[{i}].{sorted(unknown)[0]}'")
            modes.append(ModalOscillator(**m))
        return FloorModel(tuple(modes), self.attenuation_alpha, self.wave_speed,
                          tuple(tuple(p) for p in self.sensor_positions), self.noise_std)


@dataclass
class SensorConfig:
    sample_rate: float = 500.0
    gain: float = 500.0
    sensitivity: float = 28.8
    corner_frequency: float = 10.0

    def chain(self) -> SensorChain:
        return SensorChain(self.sample_rate, self.gain, self.sensitivity, self.corner_frequency)


@dataclass
class SplitConfig:
    protocol: str = "per_trial"
    fractions: list = field(default_factory=lambda: [0.70, 0.15, 0.15])


@dataclass
class GridConfig:
    """Budgeted tuning grid, run identically for both models."""

    hidden: list = field(default_factory=lambda: [16, 32, 64])
    learning_rate: list = field(default_factory=lambda: [1e-3, 3e-3, 6e-3, 1e-2])
    epochs: int = 6
    seed: int = 0


@dataclass
class BenchmarkConfig:
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    lambda_sweep: list = field(default_factory=list)   # e.g. [0, 0.01, 0.1, 1]
    tune: bool = True


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "runs"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    floor: FloorConfig = field(default_factory=FloorConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    pig: PigConfig = field(default_factory=lambda: PigConfig(frame_len=64))
    lstm: LstmConfig = field(default_factory=lambda: LstmConfig(frame_len=64))
    grid: GridConfig = field(default_factory=GridConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def pig_config(self, **over) -> PigConfig:
        d = dataclasses.asdict(self.pig)
        d.update(over)
        return PigConfig(**d)

    def lstm_config(self, **over) -> LstmConfig:
        d = dataclasses.asdict(self.lstm)
        d.update(over)
        return LstmConfig(**d)


# keys that do not change any numeric output
_HASH_EXCLUDE = {("output_dir",), ("dataset", "root"), ("dataset", "workers")}


def _build(cls, data, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config section '{path or '<root>'}' must be a mapping")
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, val in data.items():
        dotted = f"{path}.{key}" if path else str(key)
        if key not in fields:
            raise ConfigError(f"unknown config key '{dotted}'")
        default = fields[key].default_factory() if fields[key].default_factory is not dataclasses.MISSING \
            else fields[key].default
        if dataclasses.is_dataclass(default):
            base = dataclasses.asdict(default)
            if isinstance(val, dict):
                for k in val:
                    if k not in base:
                        raise ConfigError(f"unknown config key '{dotted}.{k}'")
                base.update(val)
                val = base
            kwargs[key] = _build(type(default), val, dotted)
        else:
            kwargs[key] = val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value in '{path or '<root>'}': {e}") from e


def from_dict(data: dict) -> RunConfig:
    cfg = _build(RunConfig, data, "")
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    try:
        cfg.dataset.protocol()
        cfg.floor.model()
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e
    if cfg.split.protocol not in ("per_trial", "loso"):
        raise ConfigError(f"split.protocol must be 'per_trial' or 'loso', got {cfg.split.protocol!r}")
    if len(cfg.split.fractions) != 3 or abs(sum(cfg.split.fractions) - 1.0) > 1e-9:
        raise ConfigError("split.fractions must be three numbers summing to 1")
    if cfg.sensor.corner_frequency >= cfg.sensor.sample_rate / 2:
        raise ConfigError("sensor.corner_frequency must be below Nyquist")
    if not cfg.benchmark.seeds:
        raise ConfigError("benchmark.seeds must not be empty")


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"config {path} is not valid YAML: {e}") from e
    if overrides:
        data = _merge(data, overrides)
    return from_dict(data)


def _merge(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = _merge(out.get(k) or {}, v) if isinstance(v, dict) else v
    return out


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def _strip(d: dict, prefix=()):
    out = {}
    for k, v in d.items():
        key = prefix + (k,)
        if key in _HASH_EXCLUDE:
            continue
        out[k] = _strip(v, key) if isinstance(v, dict) else v
    return out


def config_hash(cfg: RunConfig) -> str:
    canon = json.dumps(_strip(cfg.to_dict()), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
