"""Time-domain waveform engine for DAM links.

Frame layout: every coherence block of ``block_len`` samples carries
``block_len - guard`` data symbols followed by a zero guard. With
``guard >= n_span + n_max`` (``2 n~max`` in practice) nothing leaks across
blocks, so blocks can be simulated in chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .channel import MultipathChannel
from .precoding import DamPrecoder

__all__ = [
    "CONSTELLATIONS",
    "SymbolStream",
    "Waveform",
    "LinkReport",
    "generate_symbols",
    "frame_positions",
    "steady_state_mask",
    "dam_waveform",
    "single_carrier_waveform",
    "ofdm_waveform",
    "propagate",
    "measure_sinr",
    "simulate_link",
    "papr_samples",
    "papr_ccdf",
    "papr_at",
    "write_waveform",
    "read_waveform",
]

CONSTELLATIONS = ("QPSK", "16QAM", "Gaussian")


@dataclass(frozen=True)
class SymbolStream:
    symbols: np.ndarray
    constellation: str = "QPSK"

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class Waveform:
    """``M x N`` baseband samples at the symbol rate."""

    samples: np.ndarray
    sample_rate: float = 128e6

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.samples))
        object.__setattr__(self, "samples", x)

    @property
    def num_antennas(self) -> int:
        return self.samples.shape[0]

    def __len__(self) -> int:
        return self.samples.shape[1]


@dataclass
class LinkReport:
    measured_sinr_db: float
    residual_isi_power: float
    evm: float
    gain: complex = 0j
    signal_power: float = 0.0
    interference_noise_power: float = 0.0
    num_samples: int = 0
    papr_ccdf: list[tuple[float, float]] = field(default_factory=list)

    @property
    def measured_sinr(self) -> float:
        return 10 ** (self.measured_sinr_db / 10)


def generate_symbols(n: int, constellation: str = "QPSK", rng=None) -> SymbolStream:
    """i.i.d. unit-average-power symbols."""
    rng = np.random.default_rng(rng)
    names = {c.lower(): c for c in CONSTELLATIONS}
    c = names.get(str(constellation).lower())
    if c == "QPSK":
        bits = rng.integers(0, 2, size=(2, n))
        s = ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)
    elif c == "16QAM":
        lv = rng.integers(0, 4, size=(2, n)) * 2 - 3
        s = (lv[0] + 1j * lv[1]) / np.sqrt(10)
    elif c == "Gaussian":
        s = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    else:
        raise ValueError(f"unknown constellation {constellation!r}, expected one of {CONSTELLATIONS}")
    return SymbolStream(s.astype(complex), c)


def _check_frame(block_len: int, guard: int) -> int:
    if guard < 0 or block_len <= guard:
        raise ValueError(f"block_len={block_len} must exceed guard={guard}")
    return block_len - guard


def frame_positions(n_symbols: int, block_len: int, guard: int) -> np.ndarray:
    """Frame index of every data symbol."""
    data = _check_frame(block_len, guard)
    k = np.arange(n_symbols)
    return (k // data) * block_len + (k % data)


def steady_state_mask(n_symbols: int, block_len: int, guard: int, n_span: int) -> np.ndarray:
    """Symbols whose full ``+-n_span`` neighbourhood lies inside their own block."""
    data = _check_frame(block_len, guard)
    k = np.arange(n_symbols)
    j = k % data
    block_data = np.minimum(data, n_symbols - (k // data) * data)
    return (j >= n_span) & (j < block_data - n_span)


def dam_waveform(
    stream: SymbolStream | np.ndarray,
    pre: DamPrecoder,
    block_len: int,
    guard: int,
    sample_rate: float = 128e6,
) -> Waveform:
    """``x[n] = sum_l f_l s[n - kappa_l]`` inside every block.

    Symbols outside the current block read as zero, so each block is
    followed by ``guard`` samples of (at most) the delayed tail of its own
    streams. Raises ``ValueError`` if the guard cannot hold the largest
    compensation delay twice over.
    """
    s = np.asarray(getattr(stream, "symbols", stream))
    kappa = pre.comp_delays
    if guard < 2 * int(kappa.max()):
        raise ValueError(f"guard {guard} too small for compensation delays up to {int(kappa.max())}")
    pos = frame_positions(len(s), block_len, guard)
    n_blocks = math.ceil(len(s) / (block_len - guard)) if len(s) else 0
    x = np.zeros((pre.num_antennas, n_blocks * block_len), dtype=complex)
    for f, k in zip(pre.beamformers, kappa):
        if np.any(f):
            x[:, pos + k] += np.outer(f, s)
    return Waveform(x, sample_rate)


def single_carrier_waveform(stream, f: np.ndarray, sample_rate: float = 128e6) -> Waveform:
    """Conventional beamformed single carrier, ``x[n] = f s[n]``."""
    s = np.asarray(getattr(stream, "symbols", stream))
    return Waveform(np.outer(np.asarray(f, dtype=complex), s), sample_rate)


def ofdm_waveform(
    n_ofdm_symbols: int,
    K: int = 512,
    cp_length: int = 0,
    constellation: str = "QPSK",
    rng=None,
    sample_rate: float = 128e6,
) -> Waveform:
    """Single-antenna OFDM: unit-power i.i.d. subcarrier symbols, unitary IDFT."""
    data = generate_symbols(n_ofdm_symbols * K, constellation, rng).symbols.reshape(n_ofdm_symbols, K)
    t = np.fft.ifft(data, axis=1, norm="ortho")
    if cp_length:
        t = np.concatenate([t[:, K - cp_length:], t], axis=1)
    return Waveform(t.reshape(1, -1), sample_rate)


def propagate(wave: Waveform, ch: MultipathChannel, sigma2: float = 0.0, seed=None) -> np.ndarray:
    """``y[n] = sum_l h_l^H x[n - n_l] + z[n]``; output has ``N + n_max`` samples."""
    x = wave.samples
    if x.shape[0] != ch.num_antennas:
        raise ValueError(f"waveform has {x.shape[0]} antennas, channel has {ch.num_antennas}")
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    n = x.shape[1]
    u = ch.gain_matrix.conj().T @ x
    y = np.zeros(n + ch.n_max, dtype=complex)
    for l, d in enumerate(ch.delays):
        y[d:d + n] += u[l]
    if sigma2 > 0:
        rng = np.random.default_rng(seed)
        y += np.sqrt(sigma2 / 2) * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return y


def _fit(r: np.ndarray, t: np.ndarray, sigma2: float | None, silent: bool = False) -> LinkReport:
    tt = float(np.real(np.vdot(t, t)))
    g = np.vdot(t, r) / tt if tt > 0 and not silent else 0j
    e = r - g * t
    inp = float(np.mean(np.abs(e) ** 2))
    sig = abs(g) ** 2 * tt / t.size
    if sig == 0:
        sinr_db = -np.inf
    elif inp == 0:
        sinr_db = np.inf
    else:
        sinr_db = 10 * np.log10(sig / inp)
    residual = inp if sigma2 is None else max(inp - sigma2, 0.0)
    evm = np.sqrt(inp / sig) if sig > 0 else np.inf
    return LinkReport(float(sinr_db), residual, float(evm), complex(g), sig, inp, int(t.size))


def measure_sinr(
    received: np.ndarray,
    reference,
    sync_delay: int,
    sigma2: float | None = None,
    positions: np.ndarray | None = None,
    mask: np.ndarray | None = None,
    min_samples: int = 100_000,
) -> LinkReport:
    """Fit ``y[pos_k + sync_delay] ~ g s[k]`` by least squares and report SINR.

    Signal power is ``|g|^2 mean|s|^2``; everything left over counts as
    interference plus noise. With ``sigma2`` given, the residual ISI power
    is that remainder minus ``sigma2`` (clamped at zero).
    """
    s = np.asarray(getattr(reference, "symbols", reference))
    pos = np.arange(len(s)) if positions is None else np.asarray(positions)
    keep = np.ones(len(s), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if int(keep.sum()) < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {int(keep.sum())}")
    r = np.asarray(received)[pos[keep] + sync_delay]
    return _fit(r, s[keep], sigma2)


def simulate_link(
    ch: MultipathChannel,
    pre: DamPrecoder,
    sigma2: float,
    n_symbols: int,
    block_len: int,
    guard: int,
    seed=None,
    constellation: str = "QPSK",
    max_chunk_samples: int = 2 ** 22,
) -> LinkReport:
    """Generate, precode, propagate and measure a DAM link.

    Blocks are processed in chunks of at most ``max_chunk_samples`` antenna
    samples; the guard keeps chunks independent. Noise is drawn only for the
    measured samples, in symbol order, so results do not depend on the chunk
    size. SINR is measured on steady-state symbols only, with genie sync to
    ``n_max``. An all-zero precoder reports zero signal (``-inf`` dB).
    """
    if guard < ch.n_span + ch.n_max:
        raise ValueError(f"guard {guard} shorter than n_span + n_max = {ch.n_span + ch.n_max}")
    data = _check_frame(block_len, guard)
    ss = np.random.SeedSequence(seed)
    sym_seed, noise_seed = ss.spawn(2)
    stream = generate_symbols(n_symbols, constellation, np.random.default_rng(sym_seed))
    noise_rng = np.random.default_rng(noise_seed)
    mask = steady_state_mask(n_symbols, block_len, guard, ch.n_span)

    blocks_per_chunk = max(1, max_chunk_samples // (block_len * ch.num_antennas))
    chunk_syms = blocks_per_chunk * data
    rs, ts = [], []
    for start in range(0, n_symbols, chunk_syms):
        s = stream.symbols[start:start + chunk_syms]
        wave = dam_waveform(s, pre, block_len, guard)
        y = propagate(wave, ch)
        pos = frame_positions(len(s), block_len, guard)
        m = mask[start:start + len(s)]
        r = y[pos[m] + ch.n_max]
        if sigma2 > 0:
            z = noise_rng.standard_normal((r.size, 2))  # (re, im) pairs keep the stream chunk-invariant
            r = r + np.sqrt(sigma2 / 2) * (z[:, 0] + 1j * z[:, 1])
        rs.append(r)
        ts.append(s[m])
    silent = not np.any(pre.beamformers)
    return _fit(np.concatenate(rs), np.concatenate(ts), sigma2, silent)


def papr_samples(wave: Waveform, window: int = 1, oversample: int = 1) -> np.ndarray:
    """Per-window peak power over the antenna's mean power, pooled over antennas.

    ``window=1`` gives the instantaneous power distribution. ``oversample``
    applies band-limited (FFT) interpolation before measuring. Antennas
    that carry no power are skipped; a trailing partial window is dropped.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    x = wave.samples
    if oversample > 1:
        x = sps.resample(x, x.shape[1] * oversample, axis=1)
    out = []
    for row in x:
        p = np.abs(row) ** 2
        mean = p.mean()
        if mean <= 0:
            continue
        n = (p.size // window) * window
        out.append(p[:n].reshape(-1, window).max(axis=1) / mean)
    return np.concatenate(out) if out else np.zeros(0)


def papr_ccdf(
    wave: Waveform,
    window: int = 1,
    thresholds_db=(0, 2, 4, 6, 8, 10, 12),
    oversample: int = 1,
    min_samples: int = 10 ** 6,
) -> list[tuple[float, float]]:
    """``[(threshold_dB, P(PAPR > threshold))]``."""
    if len(wave) < min_samples:
        raise ValueError(f"PAPR CCDF needs at least {min_samples} samples, got {len(wave)}")
    with np.errstate(divide="ignore"):
        v = 10 * np.log10(papr_samples(wave, window, oversample))
    return [(float(t), float(np.mean(v > t))) for t in thresholds_db]


def papr_at(values: np.ndarray, probability: float) -> float:
    """PAPR (dB) exceeded with the given probability."""
    with np.errstate(divide="ignore"):
        v = 10 * np.log10(np.asarray(values))
    return float(np.quantile(v, 1.0 - probability))


def write_waveform(wave: Waveform, path, seed=None) -> tuple[Path, Path]:
    """Dump ``wave`` as little-endian interleaved float32 I/Q, antenna after antenna.

    A text sidecar ``<path>.hdr`` records ``M``, ``B``, ``length`` and ``seed``.
    """
    path = Path(path)
    wave.samples.astype("<c8").tofile(path)
    hdr = path.with_suffix(path.suffix + ".hdr")
    hdr.write_text(
        f"M={wave.num_antennas}\nB={wave.sample_rate!r}\nlength={len(wave)}\n"
        f"seed={seed}\nformat=complex64-le-interleaved\n"
    )
    return path, hdr


def read_waveform(path) -> tuple[Waveform, dict[str, str]]:
    path = Path(path)
    hdr = path.with_suffix(path.suffix + ".hdr")
    meta = dict(line.split("=", 1) for line in hdr.read_text().splitlines() if "=" in line)
    M, n = int(meta["M"]), int(meta["length"])
    x = np.fromfile(path, dtype="<c8").reshape(M, n).astype(complex)
    return Waveform(x, float(meta["B"])), meta
