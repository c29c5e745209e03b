"""Fast self-checks of the core invariants, run by ``dam-sim verify``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .beamforming import mmse_beamformer, mrt_beamformer, sinr_of, zf_beamformer
from .channel import ChannelParams, sample_channel
from .link import dam_waveform, generate_symbols, propagate
from .ofdm import (
    FrameConfig,
    OfdmConfig,
    dam_overhead,
    freq_channel,
    num_ofdm_symbols,
    ofdm_overhead,
    water_fill,
)
from .precoding import comp_delays

__all__ = ["CHECKS", "run_checks"]

P, SIGMA2 = 1.0, 1e-3


def _channels(n: int, M: int, L: int, seed: int = 11):
    return [sample_channel(np.random.SeedSequence([seed, i]), ChannelParams(M, L)) for i in range(n)]


def check_delay_alignment() -> tuple[bool, str]:
    worst = 0
    for ch in _channels(20, 8, 5):
        arrivals = comp_delays(ch) + ch.delays
        worst = max(worst, int(np.ptp(arrivals)))
    return worst == 0, f"max spread of kappa_l + n_l = {worst}"


def check_zf_isi_free() -> tuple[bool, str]:
    worst = 0.0
    for ch in _channels(5, 16, 5):
        bf = zf_beamformer(ch, P, SIGMA2)
        s = generate_symbols(4000, rng=0).symbols
        guard = 2 * ch.n_max
        y = propagate(dam_waveform(s, bf.precoder, len(s) + guard, guard), ch)
        gain = np.sum(np.einsum("ml,lm->l", ch.gain_matrix.conj(), bf.precoder.beamformers))
        want = gain * s
        got = y[ch.n_max:ch.n_max + len(s)]
        worst = max(worst, float(np.max(np.abs(got - want)) / np.max(np.abs(want))))
    return worst < 1e-10, f"max relative deviation {worst:.2e}"


def check_mmse_ordering() -> tuple[bool, str]:
    gaps = []
    for ch in _channels(10, 4, 5) + _channels(10, 2, 3):
        mm = mmse_beamformer(ch, P, SIGMA2)
        ref = [mrt_beamformer(ch, P, SIGMA2).analytic_sinr]
        if ch.num_antennas >= ch.num_paths:
            ref.append(zf_beamformer(ch, P, SIGMA2).analytic_sinr)
        gaps.append(mm.analytic_sinr - max(ref) * (1 - 1e-12))
        gaps.append(-abs(sinr_of(mm.f_bar, ch, P, SIGMA2) / mm.analytic_sinr - 1) + 1e-9)
    return min(gaps) >= 0, f"min margin {min(gaps):.3e}"


def check_parseval() -> tuple[bool, str]:
    worst = 0.0
    for ch in _channels(10, 8, 5):
        hk = freq_channel(ch, 512)
        lhs = np.sum(np.abs(hk) ** 2) / 512
        worst = max(worst, abs(lhs / ch.total_gain() - 1))
    return worst < 1e-10, f"max relative error {worst:.2e}"


def check_water_filling() -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        g = rng.exponential(size=32)
        p, level = water_fill(g, 1.0, 0.1)
        on = p > 0
        worst = max(worst, abs(p.sum() - 1.0), float(np.max(np.abs(p[on] + 0.1 / g[on] - level))) / level)
        if np.any(0.1 / g[~on] < level - 1e-12):
            return False, "inactive channel below water level"
    return worst < 1e-8, f"max KKT violation {worst:.2e}"


def check_overheads() -> tuple[bool, str]:
    frame, ofdm = FrameConfig(), OfdmConfig()
    n_c = frame.n_c
    ok = (
        n_c == 128_000
        and num_ofdm_symbols(n_c, ofdm) == 231
        and dam_overhead(n_c, 40) == 0.000625
        and round(ofdm_overhead(n_c, ofdm), 3) == 0.072
    )
    return ok, f"n_c={n_c}, n_OFDM={num_ofdm_symbols(n_c, ofdm)}, " \
        f"DAM={dam_overhead(n_c, 40):.4%}, OFDM={ofdm_overhead(n_c, ofdm):.4%}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "delay alignment": check_delay_alignment,
    "ISI-ZF waveform is ISI-free": check_zf_isi_free,
    "MMSE dominates ZF/MRT": check_mmse_ordering,
    "Parseval time/frequency": check_parseval,
    "water-filling KKT": check_water_filling,
    "overhead arithmetic": check_overheads,
}


def run_checks() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
