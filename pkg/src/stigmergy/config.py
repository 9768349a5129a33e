"""Run configuration: one YAML document with ``kernel``, ``experiment1``,
``experiment2`` and ``output`` sections.

Every parameter has a shipped default taken from the dataclass it feeds, so
an empty document is a valid config.  Unknown keys are rejected, and the
digest is a SHA-256 of the canonical JSON form of the effective config.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import yaml

from stigmergy.errors import ConfigError
from stigmergy.kernel import (CalciumParams, GluParams, KernelTable, RegulationParams,
                              StimulusWaveform, TelegraphParams, build_diffusion_kernel,
                              build_gaussian_kernel)
from stigmergy.pattern import PatternConfig
from stigmergy.task_allocation import Experiment1Config


@dataclasses.dataclass(frozen=True)
class KernelConfig:
    waveform: StimulusWaveform = StimulusWaveform()
    glu: GluParams = GluParams()
    calcium: CalciumParams = CalciumParams()
    telegraph: TelegraphParams = TelegraphParams()
    regulation: RegulationParams = RegulationParams()
    d_th: float = 10.0
    gaussian_sigma: float = 4.5
    gaussian_spacing: float = 0.1

    def diffusion(self) -> KernelTable:
        return build_diffusion_kernel(self.waveform, self.glu, self.calcium, self.telegraph,
                                      self.regulation, self.d_th)

    def gaussian(self) -> KernelTable:
        return build_gaussian_kernel(self.gaussian_sigma, self.d_th, self.gaussian_spacing)

    def build(self, name="diffusion") -> KernelTable:
        if name == "diffusion":
            return self.diffusion()
        if name == "gaussian":
            return self.gaussian()
        raise ConfigError(f"unknown kernel {name!r}")


@dataclasses.dataclass(frozen=True)
class OutputConfig:
    seeds: int = 1
    jobs: int = 1

    def __post_init__(self):
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    kernel: KernelConfig = KernelConfig()
    experiment1: Experiment1Config = Experiment1Config()
    experiment2: PatternConfig = PatternConfig()
    output: OutputConfig = OutputConfig()

    def __post_init__(self):
        for section in ("experiment1", "experiment2"):
            if getattr(self, section).d_th != self.kernel.d_th:
                raise ConfigError(f"{section}.d_th must equal kernel.d_th")

    def to_dict(self):
        return _to_plain(self)

    @property
    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    def replace(self, section, **changes):
        return dataclasses.replace(self, **{
            section: dataclasses.replace(getattr(self, section), **changes)})


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


def _coerce(value, default, where):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if default is None and value is None:
        return None
    if isinstance(default, float) or default is None:
        # fields defaulting to None are optional numbers
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{where}: expected a list of {len(default)} items")
        return tuple(_coerce(v, d, f"{where}[{i}]") for i, (v, d) in enumerate(zip(value, default)))
    raise ConfigError(f"{where}: unsupported value {value!r}")


def _build(cls, data, where):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    defaults = cls()
    kwargs = {}
    for name, value in data.items():
        default = getattr(defaults, name)
        path = f"{where}.{name}" if where else name
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, path)
        elif name == "targets":
            # one or two entries, each a bundled glyph name or a PBM path
            if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
                raise ConfigError(f"{path}: expected a list of strings")
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = _coerce(value, default, path)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return _build(RunConfig, data, "")


def load_config(path=None) -> RunConfig:
    """Read a YAML config; ``None`` or ``"default"`` gives the shipped defaults."""
    if path is None or str(path) == "default":
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text)

