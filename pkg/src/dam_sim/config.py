"""Experiment configuration.

Config files are YAML with the nesting below; every key is optional and an
empty file reproduces the default antenna sweep::

    sweep: {variable: M, values: [32, 64, 128, 256]}
    trials: 500
    base_seed: 2021
    workers: 1
    schemes: [DAM-ZF, DAM-MRT, DAM-MMSE, OFDM-WF]
    link_budget: {power_dbm: 30, noise_dbm: -85}
    frame: {bandwidth_hz: 128e6, coherence_time_s: 1e-3, carrier_hz: 28e9}
    ofdm: {num_subcarriers: 512, cp_length: 40}
    channel:
      num_antennas: 200      # fixed value when sweeping L
      num_paths: 5           # fixed value when sweeping M
      tau_max_s: 312.5e-9
      mu_max: 3
      aod_interval_deg: [-60, 60]
      element_spacing: 0.5
      gain_model: {tau_decay_s: 20e-9, gain_db: -114}
    link_level: {enabled: false, n_symbols: 200000, papr_samples: 1000000,
                 papr_antennas: 4, window: 1, oversample: 1}
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .beamforming import LinkBudget
from .channel import ChannelParams, GainModel
from .ofdm import FrameConfig, OfdmConfig

__all__ = [
    "ConfigError",
    "ALL_SCHEMES",
    "SweepSpec",
    "LinkBudgetSpec",
    "FrameSpec",
    "OfdmSpec",
    "GainModelSpec",
    "ChannelSpec",
    "LinkLevelSpec",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
]

ALL_SCHEMES = ("DAM-ZF", "DAM-MRT", "DAM-MMSE", "OFDM-WF")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass
class SweepSpec:
    variable: str = "M"
    values: list[int] = field(default_factory=lambda: [32, 64, 128, 256])


@dataclass
class LinkBudgetSpec:
    power_dbm: float = 30.0
    noise_dbm: float = -85.0

    def build(self) -> LinkBudget:
        return LinkBudget.from_dbm(self.power_dbm, self.noise_dbm)


@dataclass
class FrameSpec:
    bandwidth_hz: float = 128e6
    coherence_time_s: float = 1e-3
    # metadata only: no computation depends on the carrier
    carrier_hz: float = 28e9

    def build(self) -> FrameConfig:
        return FrameConfig(self.bandwidth_hz, self.coherence_time_s)


@dataclass
class OfdmSpec:
    num_subcarriers: int = 512
    cp_length: int = 40

    def build(self) -> OfdmConfig:
        return OfdmConfig(self.num_subcarriers, self.cp_length)


@dataclass
class GainModelSpec:
    tau_decay_s: float = 20e-9
    gain_db: float = -114.0

    def build(self) -> GainModel:
        return GainModel(self.tau_decay_s, self.gain_db)


@dataclass
class ChannelSpec:
    num_antennas: int = 200
    num_paths: int = 5
    tau_max_s: float = 312.5e-9
    mu_max: int = 3
    aod_interval_deg: list[float] = field(default_factory=lambda: [-60.0, 60.0])
    element_spacing: float = 0.5
    gain_model: GainModelSpec = field(default_factory=GainModelSpec)


@dataclass
class LinkLevelSpec:
    enabled: bool = False
    n_symbols: int = 200_000
    papr_samples: int = 1_000_000
    papr_antennas: int = 4
    window: int = 1
    oversample: int = 1
    thresholds_db: list[float] = field(default_factory=lambda: [float(t) for t in range(0, 13)])


@dataclass
class ExperimentConfig:
    sweep: SweepSpec = field(default_factory=SweepSpec)
    trials: int = 500
    base_seed: int = 2021
    workers: int = 1
    schemes: list[str] = field(default_factory=lambda: list(ALL_SCHEMES))
    link_budget: LinkBudgetSpec = field(default_factory=LinkBudgetSpec)
    frame: FrameSpec = field(default_factory=FrameSpec)
    ofdm: OfdmSpec = field(default_factory=OfdmSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    link_level: LinkLevelSpec = field(default_factory=LinkLevelSpec)

    @property
    def delay_bound(self) -> int:
        """``n~max``: the CP length doubles as DAM's delay bound."""
        return self.ofdm.cp_length

    def channel_params(self, value: int) -> ChannelParams:
        """Channel parameters at one sweep point."""
        c = self.channel
        M, L = c.num_antennas, c.num_paths
        if self.sweep.variable == "M":
            M = int(value)
        else:
            L = int(value)
        return ChannelParams(
            num_antennas=M,
            num_paths=L,
            bandwidth=self.frame.bandwidth_hz,
            tau_max=c.tau_max_s,
            mu_max=c.mu_max,
            aod_interval=(float(c.aod_interval_deg[0]), float(c.aod_interval_deg[1])),
            element_spacing=c.element_spacing,
            gain_model=c.gain_model.build(),
        )

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def problems(self) -> list[str]:
        """All validation failures, each prefixed by the offending field."""
        out = []
        if self.sweep.variable not in ("M", "L"):
            out.append(f"sweep.variable: must be 'M' or 'L', got {self.sweep.variable!r}")
        if not self.sweep.values:
            out.append("sweep.values: must not be empty")
        if any(v < 1 for v in self.sweep.values):
            out.append("sweep.values: entries must be >= 1")
        if self.trials < 1:
            out.append(f"trials: must be >= 1, got {self.trials}")
        if self.workers < 1:
            out.append(f"workers: must be >= 1, got {self.workers}")
        bad = [s for s in self.schemes if s not in ALL_SCHEMES]
        if bad:
            out.append(f"schemes: unknown {bad}, expected a subset of {list(ALL_SCHEMES)}")
        if not self.frame.bandwidth_hz > 0:
            out.append("frame.bandwidth_hz: must be > 0")
        if not self.frame.coherence_time_s > 0:
            out.append("frame.coherence_time_s: must be > 0")
        if self.ofdm.num_subcarriers < 1:
            out.append("ofdm.num_subcarriers: must be >= 1")
        if self.ofdm.cp_length < 0:
            out.append("ofdm.cp_length: must be >= 0")
        if self.ofdm.num_subcarriers <= self.ofdm.cp_length:
            out.append("ofdm.num_subcarriers: must exceed ofdm.cp_length")
        if not out:
            n_c = self.frame.build().n_c
            if n_c <= 2 * self.delay_bound:
                out.append(f"frame.coherence_time_s: n_c={n_c} must exceed 2*ofdm.cp_length")
        c = self.channel
        max_delay = int(round(c.tau_max_s * self.frame.bandwidth_hz))
        if max_delay > self.ofdm.cp_length:
            out.append(
                f"ofdm.cp_length: {self.ofdm.cp_length} does not cover the maximum "
                f"delay round(channel.tau_max_s * bandwidth) = {max_delay}"
            )
        Ls = self.sweep.values if self.sweep.variable == "L" else [c.num_paths]
        if any(L > max_delay + 1 for L in Ls):
            out.append(f"channel.num_paths: at most {max_delay + 1} distinct delays are available")
        if c.num_antennas < 1:
            out.append("channel.num_antennas: must be >= 1")
        if c.num_paths < 1:
            out.append("channel.num_paths: must be >= 1")
        if c.mu_max < 1:
            out.append("channel.mu_max: must be >= 1")
        if len(c.aod_interval_deg) != 2 or not (-90 < c.aod_interval_deg[0] <= c.aod_interval_deg[1] < 90):
            out.append("channel.aod_interval_deg: need [lo, hi] with -90 < lo <= hi < 90")
        if not c.element_spacing > 0:
            out.append("channel.element_spacing: must be > 0")
        if not c.gain_model.tau_decay_s > 0:
            out.append("channel.gain_model.tau_decay_s: must be > 0")
        ll = self.link_level
        if ll.window < 1:
            out.append("link_level.window: must be >= 1")
        if ll.oversample < 1:
            out.append("link_level.oversample: must be >= 1")
        if ll.papr_antennas < 1:
            out.append("link_level.papr_antennas: must be >= 1")
        return out

    def validate(self) -> "ExperimentConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self


def _coerce(tp, value, where: str, problems: list[str]):
    origin = typing.get_origin(tp)
    try:
        if dataclasses.is_dataclass(tp):
            if not isinstance(value, dict):
                problems.append(f"{where}: expected a mapping")
                return tp()
            return _build(tp, value, where, problems)
        if origin is list:
            (item,) = typing.get_args(tp)
            if not isinstance(value, (list, tuple)):
                value = [value]
            return [_coerce(item, v, f"{where}[{i}]", problems) for i, v in enumerate(value)]
        if tp is bool:
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if tp is int:
            f = float(value)
            if not f.is_integer():
                raise ValueError(f"{value!r} is not an integer")
            return int(f)
        if tp is float:
            f = float(value)
            if math.isnan(f):
                raise ValueError("NaN")
            return f
        return tp(value)
    except (TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
        return None


def _build(cls, data: dict, prefix: str, problems: list[str]):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            problems.append(f"{prefix + '.' if prefix else ''}{key}: unknown field")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            where = f"{prefix}.{f.name}" if prefix else f.name
            v = _coerce(hints[f.name], data[f.name], where, problems)
            if v is not None:
                kwargs[f.name] = v
    return cls(**kwargs)


def config_from_dict(data: dict | None) -> ExperimentConfig:
    problems: list[str] = []
    cfg = _build(ExperimentConfig, data or {}, "", problems)
    if problems:
        raise ConfigError(problems)
    return cfg.validate()


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Read a YAML config; ``None`` or an empty file gives the defaults."""
    if path is None:
        return config_from_dict({})
    text = Path(path).read_text()
    data = yaml.safe_load(text) if text.strip() else {}
    if data is not None and not isinstance(data, dict):
        raise ConfigError(["<root>: expected a mapping"])
    return config_from_dict(data)
