"""Sparse multipath MISO channels with sub-path structure.

A channel is a set of temporal-resolvable paths. Path ``l`` has an integer
delay ``n_l`` (in symbol durations ``1/B``) and a gain vector ``h_l`` over
the ``M`` transmit antennas, built from ``mu_l`` same-delay sub-paths with
distinct angles of departure::

    h_l = alpha_l * sum_i exp(j phi_li) / sqrt(mu_l) * a(theta_li)

Channels are immutable and can be round-tripped through a JSON record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = [
    "UlaGeometry",
    "SubPath",
    "ChannelPath",
    "MultipathChannel",
    "GainModel",
    "ChannelParams",
    "array_response",
    "sample_channel",
    "impulse_response",
    "channel_from_vectors",
    "channel_to_dict",
    "channel_from_dict",
    "save_channel",
    "load_channel",
]


@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array; spacing is in wavelengths."""

    num_antennas: int
    element_spacing: float = 0.5

    def __post_init__(self) -> None:
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ValueError(f"num_antennas must be a positive integer, got {self.num_antennas}")
        if not self.element_spacing > 0:
            raise ValueError(f"element_spacing must be > 0, got {self.element_spacing}")


@dataclass(frozen=True)
class SubPath:
    aod_deg: float
    phase_rad: float


def array_response(geometry: UlaGeometry, aod_deg: float) -> np.ndarray:
    """Steering vector of the ULA towards ``aod_deg``.

    Element ``m`` is ``exp(j 2 pi d m sin(theta))``, so element 0 is the
    phase reference and every entry has unit modulus.
    """
    if not abs(aod_deg) < 90.0:
        raise ValueError(f"AoD must satisfy |aod| < 90 degrees, got {aod_deg}")
    m = np.arange(geometry.num_antennas)
    phase = 2.0 * np.pi * geometry.element_spacing * m * np.sin(np.deg2rad(aod_deg))
    return np.exp(1j * phase)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelPath:
    """One resolvable path: delay, gain vector and its sub-path description.

    ``sub_paths`` may be empty for paths given directly by their gain vector
    (e.g. i.i.d. Rayleigh test channels); ``reconstruct`` is then undefined.
    """

    delay: int
    gain_vector: np.ndarray
    sub_paths: tuple[SubPath, ...] = ()
    alpha: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if int(self.delay) != self.delay or self.delay < 0:
            raise ValueError(f"path delay must be a non-negative integer, got {self.delay}")
        object.__setattr__(self, "delay", int(self.delay))
        object.__setattr__(self, "gain_vector", _readonly(self.gain_vector))
        object.__setattr__(self, "sub_paths", tuple(self.sub_paths))
        object.__setattr__(self, "alpha", complex(self.alpha))

    def reconstruct(self, geometry: UlaGeometry) -> np.ndarray:
        """Rebuild ``h_l`` from ``alpha`` and the stored sub-paths."""
        if not self.sub_paths:
            raise ValueError("path has no sub-path description")
        mu = len(self.sub_paths)
        acc = np.zeros(geometry.num_antennas, dtype=complex)
        for sp in self.sub_paths:
            acc += np.exp(1j * sp.phase_rad) * array_response(geometry, sp.aod_deg)
        return self.alpha * acc / np.sqrt(mu)


@dataclass(frozen=True)
class MultipathChannel:
    paths: tuple[ChannelPath, ...]
    geometry: UlaGeometry

    def __post_init__(self) -> None:
        paths = tuple(self.paths)
        object.__setattr__(self, "paths", paths)
        if len(paths) < 1:
            raise ValueError("a channel needs at least one path")
        delays = [p.delay for p in paths]
        if len(set(delays)) != len(delays):
            raise ValueError(f"path delays must be pairwise distinct, got {delays}")
        for p in paths:
            if p.gain_vector.shape != (self.geometry.num_antennas,):
                raise ValueError(
                    f"gain vector has shape {p.gain_vector.shape}, "
                    f"expected ({self.geometry.num_antennas},)"
                )

    @property
    def num_antennas(self) -> int:
        return self.geometry.num_antennas

    @property
    def num_paths(self) -> int:
        return len(self.paths)

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.paths], dtype=int)

    @property
    def gain_matrix(self) -> np.ndarray:
        """``M x L`` matrix whose column ``l`` is ``h_l``."""
        return np.stack([p.gain_vector for p in self.paths], axis=1)

    @property
    def n_min(self) -> int:
        return int(self.delays.min())

    @property
    def n_max(self) -> int:
        return int(self.delays.max())

    @property
    def n_span(self) -> int:
        return self.n_max - self.n_min

    def total_gain(self) -> float:
        """Sum of ``||h_l||^2`` over all paths."""
        return float(np.sum(np.abs(self.gain_matrix) ** 2))


def impulse_response(ch: MultipathChannel, n: int) -> np.ndarray:
    """Channel tap at delay ``n``: ``h_l`` if some path has ``n_l = n``, else zeros."""
    for p in ch.paths:
        if p.delay == n:
            return np.array(p.gain_vector)
    return np.zeros(ch.num_antennas, dtype=complex)


def channel_from_vectors(
    gain_vectors: Sequence[Sequence[complex]] | np.ndarray,
    delays: Sequence[int],
    element_spacing: float = 0.5,
) -> MultipathChannel:
    """Build a channel from explicit gain vectors (rows or list of vectors)."""
    vecs = [np.asarray(v, dtype=complex) for v in gain_vectors]
    if len(vecs) != len(delays):
        raise ValueError("need one delay per gain vector")
    geometry = UlaGeometry(len(vecs[0]), element_spacing)
    paths = tuple(ChannelPath(int(d), v) for v, d in zip(vecs, delays))
    return MultipathChannel(paths, geometry)


@dataclass(frozen=True)
class GainModel:
    """Surrogate for the mmWave path-gain statistics.

    Per-path power follows an exponential power-delay profile
    ``g_l ~ exp(-n_l T_s / tau_decay)`` and is normalised per realisation so
    that ``sum_l g_l = 10**(gain_db/10)``. Since each sub-path mixture has
    unit expected norm per antenna, ``E[sum_l ||h_l||^2] = M * G_total``.
    ``tau_decay = inf`` gives equal average power on every path.
    """

    tau_decay: float = 20e-9
    gain_db: float = -114.0

    def __post_init__(self) -> None:
        if not self.tau_decay > 0:
            raise ValueError(f"tau_decay must be > 0, got {self.tau_decay}")

    @property
    def gain_total(self) -> float:
        return 10.0 ** (self.gain_db / 10.0)

    def path_powers(self, delays: np.ndarray, bandwidth: float) -> np.ndarray:
        d = np.asarray(delays, dtype=float)
        # relative to the earliest path so the weights cannot all underflow
        w = np.exp(-(d - d.min()) / bandwidth / self.tau_decay)
        return self.gain_total * w / w.sum()


@dataclass(frozen=True)
class ChannelParams:
    num_antennas: int
    num_paths: int = 5
    bandwidth: float = 128e6
    tau_max: float = 312.5e-9
    mu_max: int = 3
    aod_interval: tuple[float, float] = (-60.0, 60.0)
    element_spacing: float = 0.5
    gain_model: GainModel = field(default_factory=GainModel)

    @property
    def max_delay(self) -> int:
        """Largest admissible integer delay, ``round(tau_max * B)``."""
        return int(round(self.tau_max * self.bandwidth))

    def validate(self) -> None:
        if self.num_paths < 1:
            raise ValueError(f"num_paths must be >= 1, got {self.num_paths}")
        if self.num_paths > self.max_delay + 1:
            raise ValueError(
                f"num_paths={self.num_paths} exceeds the {self.max_delay + 1} "
                f"distinct delays available in [0, tau_max*B]"
            )
        if self.mu_max < 1:
            raise ValueError(f"mu_max must be >= 1, got {self.mu_max}")
        lo, hi = self.aod_interval
        if not (-90.0 < lo <= hi < 90.0):
            raise ValueError(f"aod_interval must lie inside (-90, 90), got {self.aod_interval}")


def sample_channel(seed: int | np.random.SeedSequence | np.random.Generator, params: ChannelParams) -> MultipathChannel:
    """Draw a random channel realisation.

    Delays are distinct integers sampled without replacement from
    ``{0, ..., round(tau_max B)}``; ``mu_l`` is uniform on ``{1..mu_max}``;
    AoDs are uniform on ``aod_interval`` and sub-path phases uniform on
    ``[0, 2 pi)``. The draw order is fixed so a seed fully determines the
    realisation.
    """
    params.validate()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    geometry = UlaGeometry(params.num_antennas, params.element_spacing)
    L = params.num_paths

    delays = np.sort(rng.choice(params.max_delay + 1, size=L, replace=False))
    mus = rng.integers(1, params.mu_max + 1, size=L)
    path_phases = rng.uniform(0.0, 2.0 * np.pi, size=L)
    powers = params.gain_model.path_powers(delays, params.bandwidth)

    lo, hi = params.aod_interval
    paths = []
    for l in range(L):
        aods = rng.uniform(lo, hi, size=mus[l])
        phases = rng.uniform(0.0, 2.0 * np.pi, size=mus[l])
        subs = tuple(SubPath(float(a), float(p)) for a, p in zip(aods, phases))
        alpha = np.sqrt(powers[l]) * np.exp(1j * path_phases[l])
        steer = np.exp(
            1j * 2.0 * np.pi * params.element_spacing
            * np.outer(np.arange(params.num_antennas), np.sin(np.deg2rad(aods)))
        )
        h = alpha * (steer @ np.exp(1j * phases)) / np.sqrt(mus[l])
        paths.append(ChannelPath(int(delays[l]), h, subs, alpha))
    return MultipathChannel(tuple(paths), geometry)


# -- fixture records ---------------------------------------------------------

def _c2j(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def channel_to_dict(ch: MultipathChannel) -> dict[str, Any]:
    """Structured record of a channel; gain vectors are stored explicitly."""
    return {
        "num_antennas": ch.num_antennas,
        "element_spacing": ch.geometry.element_spacing,
        "paths": [
            {
                "delay": p.delay,
                "alpha": _c2j(p.alpha),
                "sub_paths": [{"aod_deg": s.aod_deg, "phase_rad": s.phase_rad} for s in p.sub_paths],
                "gain_vector": [_c2j(z) for z in p.gain_vector],
            }
            for p in ch.paths
        ],
    }


def channel_from_dict(record: dict[str, Any]) -> MultipathChannel:
    geometry = UlaGeometry(int(record["num_antennas"]), float(record.get("element_spacing", 0.5)))
    paths = []
    for p in record["paths"]:
        subs = tuple(SubPath(float(s["aod_deg"]), float(s["phase_rad"])) for s in p.get("sub_paths", []))
        alpha = complex(*p.get("alpha", [1.0, 0.0]))
        if "gain_vector" in p:
            h = np.array([complex(re, im) for re, im in p["gain_vector"]])
            paths.append(ChannelPath(int(p["delay"]), h, subs, alpha))
        else:
            stub = ChannelPath(int(p["delay"]), np.zeros(geometry.num_antennas), subs, alpha)
            paths.append(ChannelPath(stub.delay, stub.reconstruct(geometry), subs, alpha))
    return MultipathChannel(tuple(paths), geometry)


def save_channel(ch: MultipathChannel, path) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_dict(ch), fh, indent=1)


def load_channel(path) -> MultipathChannel:
    with open(path) as fh:
        return channel_from_dict(json.load(fh))
