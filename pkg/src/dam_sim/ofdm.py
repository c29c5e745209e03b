"""OFDM comparison arm and the overhead-aware spectral efficiencies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import MultipathChannel

__all__ = [
    "OfdmConfig",
    "FrameConfig",
    "freq_channel",
    "water_fill",
    "ofdm_spectral_efficiency",
    "dam_spectral_efficiency",
    "dam_overhead",
    "ofdm_overhead",
    "num_ofdm_symbols",
]


@dataclass(frozen=True)
class OfdmConfig:
    num_subcarriers: int = 512
    cp_length: int = 40

    def __post_init__(self) -> None:
        if self.num_subcarriers < 1:
            raise ValueError(f"num_subcarriers must be >= 1, got {self.num_subcarriers}")
        if self.cp_length < 0:
            raise ValueError(f"cp_length must be >= 0, got {self.cp_length}")
        if not self.num_subcarriers > self.cp_length:
            raise ValueError("num_subcarriers must exceed cp_length")


@dataclass(frozen=True)
class FrameConfig:
    """Coherence-block framing; ``n_c = round(T_c B)`` single-carrier symbols."""

    bandwidth: float = 128e6
    coherence_time: float = 1e-3

    def __post_init__(self) -> None:
        if not self.bandwidth > 0 or not self.coherence_time > 0:
            raise ValueError("bandwidth and coherence_time must be > 0")

    @property
    def symbol_duration(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def n_c(self) -> int:
        return int(round(self.coherence_time * self.bandwidth))


def num_ofdm_symbols(n_c: int, ofdm: OfdmConfig) -> int:
    """Whole OFDM symbols (with CP) that fit in one coherence block."""
    return n_c // (ofdm.num_subcarriers + ofdm.cp_length)


def dam_overhead(n_c: int, delay_bound: int) -> float:
    """Guard-interval fraction ``2 n~max / n_c`` of one DAM coherence block."""
    return 2 * delay_bound / n_c


def ofdm_overhead(n_c: int, ofdm: OfdmConfig) -> float:
    """CP fraction ``n_OFDM n~max / n_c``."""
    return num_ofdm_symbols(n_c, ofdm) * ofdm.cp_length / n_c


def freq_channel(ch: MultipathChannel, K: int) -> np.ndarray:
    """``K x M`` array; row ``k`` is ``h[k] = sum_l h_l exp(-j 2 pi k n_l / K)``."""
    if not ch.n_max < K:
        raise ValueError(f"max delay {ch.n_max} must be < K={K}")
    taps = np.zeros((K, ch.num_antennas), dtype=complex)
    for p in ch.paths:
        taps[p.delay] = p.gain_vector
    return np.fft.fft(taps, axis=0)


def water_fill(gains, P: float, noise_per_sc: float) -> tuple[np.ndarray, float]:
    """Classic water-filling over parallel channels.

    Returns ``(powers, level)`` with ``powers[k] = max(0, level - noise/gains[k])``
    and ``sum(powers) = P``. Gains are sorted once and the active set grown
    until the next channel's floor lies above the water level.

    Raises
    ------
    ValueError
        If no gain is positive.
    """
    g = np.asarray(gains, dtype=float)
    if np.any(g < 0):
        raise ValueError("gains must be non-negative")
    if not np.any(g > 0):
        raise ValueError("water-filling needs at least one positive gain")
    if not P > 0 or not noise_per_sc > 0:
        raise ValueError("P and noise_per_sc must be > 0")
    order = np.argsort(-g, kind="stable")
    with np.errstate(over="ignore", divide="ignore"):
        floors = np.where(g[order] > 0, noise_per_sc / np.where(g[order] > 0, g[order], 1.0), np.inf)
    # channels whose floor overflows can never be filled
    pos = np.isfinite(floors)
    if not pos[0]:
        raise ValueError("all gains are too small to carry power")
    csum = np.cumsum(np.where(pos, floors, 0.0))
    n_pos = int(pos.sum())
    active = 1
    level = P + floors[0]
    for a in range(1, n_pos + 1):
        cand = (P + csum[a - 1]) / a
        if cand > floors[a - 1]:
            active, level = a, cand
        else:
            break
    powers = np.zeros_like(g)
    idx = order[:active]
    f = floors[:active]
    # (P + sum_j (f_j - f_i)) / a avoids cancellation when floors dwarf P
    p = np.maximum((P + (np.sum(f) - active * f)) / active, 0.0)
    powers[idx] = p * (P / p.sum())
    return powers, float(level)


def ofdm_spectral_efficiency(
    ch: MultipathChannel,
    frame: FrameConfig,
    ofdm: OfdmConfig,
    P: float,
    sigma2: float,
    allocation: str = "waterfill",
) -> float:
    """Effective OFDM spectral efficiency in bps/Hz.

    Each subcarrier uses MRT, so its gain is ``||h[k]||^2``; noise per
    subcarrier is ``sigma2 / K``. ``allocation="uniform"`` spreads ``P``
    evenly instead of water-filling.
    """
    K = ofdm.num_subcarriers
    if ch.n_max > ofdm.cp_length:
        raise ValueError(f"CP length {ofdm.cp_length} does not cover max delay {ch.n_max}")
    n_c = frame.n_c
    gains = np.sum(np.abs(freq_channel(ch, K)) ** 2, axis=1)
    noise = sigma2 / K
    if allocation == "waterfill":
        p, _ = water_fill(gains, P, noise)
    elif allocation == "uniform":
        p = np.full(K, P / K)
    else:
        raise ValueError(f"unknown allocation {allocation!r}")
    rate = float(np.mean(np.log2(1.0 + p * gains / noise)))
    return (1.0 - ofdm_overhead(n_c, ofdm)) * rate


def dam_spectral_efficiency(gamma: float, frame: FrameConfig, delay_bound: int) -> float:
    """``(n_c - 2 n~max) / n_c * log2(1 + gamma)``."""
    n_c = frame.n_c
    if not n_c > 2 * delay_bound:
        raise ValueError(f"n_c={n_c} must exceed twice the delay bound {delay_bound}")
    if gamma < 0:
        raise ValueError(f"SINR must be >= 0, got {gamma}")
    return (1.0 - dam_overhead(n_c, delay_bound)) * math.log2(1.0 + gamma)
