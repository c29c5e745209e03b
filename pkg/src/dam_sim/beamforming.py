"""ISI-ZF, ISI-MRT and ISI-MMSE beamforming for DAM.

All three designs act on the stacked beamformer ``f_bar`` (``M L`` entries,
block ``l`` is ``f_l``) and use the full power budget. ``sinr_of`` evaluates
any stacked beamformer against the grouped-delay SINR and is the common
yardstick for the three schemes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .channel import MultipathChannel
from .precoding import (
    POWER_SLACK,
    DamPrecoder,
    StackedChannel,
    comp_delays,
    effective_channels,
    stack,
    unstack,
)

__all__ = [
    "InfeasibleZF",
    "LinkBudget",
    "BeamformerResult",
    "SCHEMES",
    "zf_projections",
    "zf_beamformer",
    "mrt_beamformer",
    "mmse_beamformer",
    "mmse_covariance",
    "sinr_of",
    "design",
]


SCHEMES = ("ZF", "MRT", "MMSE")


class InfeasibleZF(ValueError):
    """The ISI-ZF condition cannot be met (``M < L`` or a rank-deficient ``H_l``)."""


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power ``P`` and noise power ``sigma2``, both in watts."""

    power: float
    sigma2: float

    def __post_init__(self) -> None:
        if not self.power > 0:
            raise ValueError(f"power must be > 0, got {self.power}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")

    @classmethod
    def from_dbm(cls, power_dbm: float, noise_dbm: float) -> "LinkBudget":
        return cls(10 ** ((power_dbm - 30) / 10), 10 ** ((noise_dbm - 30) / 10))

    @property
    def p_bar(self) -> float:
        return self.power / self.sigma2


@dataclass(frozen=True)
class BeamformerResult:
    precoder: DamPrecoder
    analytic_sinr: float
    scheme: str

    @property
    def f_bar(self) -> np.ndarray:
        return self.precoder.f_bar


def _finish(f_bar: np.ndarray, ch: MultipathChannel, P: float, sinr: float, scheme: str) -> BeamformerResult:
    # fix the global phase so that h_bar^H f_bar is real and >= 0
    c = np.vdot(stack(ch.gain_matrix.T), f_bar)
    if abs(c) > 0:
        f_bar = f_bar * (np.conj(c) / abs(c))
    pre = DamPrecoder(unstack(f_bar, ch.num_paths), comp_delays(ch), P)
    return BeamformerResult(pre, float(max(sinr, 0.0)), scheme)


def _check_budget(P: float, sigma2: float, allow_zero_noise: bool = False) -> None:
    if not P > 0:
        raise ValueError(f"transmit power must be > 0, got {P}")
    if sigma2 < 0 or (sigma2 == 0 and not allow_zero_noise):
        raise ValueError(f"noise power must be > 0, got {sigma2}")


def zf_projections(ch: MultipathChannel) -> np.ndarray:
    """Return the ``M x L`` matrix whose column ``l`` is ``Q_l h_l``.

    ``Q_l`` projects onto the orthogonal complement of the other paths'
    gain vectors. The complement is built from a column-pivoted QR of
    ``H_l``; the projection is applied twice (re-orthogonalisation) so the
    nulling holds to working precision.
    """
    H = ch.gain_matrix
    M, L = H.shape
    if M < L:
        raise InfeasibleZF(f"ISI-ZF needs M >= L, got M={M}, L={L}")
    out = np.empty_like(H)
    for l in range(L):
        h = H[:, l]
        if L == 1:
            out[:, l] = h
            continue
        Hl = np.delete(H, l, axis=1)
        Qb, R, _ = sla.qr(Hl, mode="economic", pivoting=True)
        tol = M * np.finfo(float).eps * np.max(np.linalg.norm(Hl, axis=0))
        rank = int(np.sum(np.abs(np.diag(R)) > tol))
        if rank < L - 1:
            raise InfeasibleZF(f"H_{l} has rank {rank} < {L - 1}")
        v = h - Qb @ (Qb.conj().T @ h)
        v = v - Qb @ (Qb.conj().T @ v)
        out[:, l] = v
    return out


def zf_beamformer(ch: MultipathChannel, P: float, sigma2: float) -> BeamformerResult:
    """Optimal ISI-ZF beamformer ``f_l = sqrt(P) Q_l h_l / sqrt(sum ||Q_m h_m||^2)``.

    The resulting SNR is ``P/sigma2 * sum_l ||Q_l h_l||^2``.

    Raises
    ------
    InfeasibleZF
        If ``M < L``, some ``H_l`` is rank deficient, or every projected
        channel vanishes.
    """
    _check_budget(P, sigma2)
    V = zf_projections(ch)
    total = float(np.sum(np.abs(V) ** 2))
    if not total > 0:
        raise InfeasibleZF("all projected path channels are zero")
    F = np.sqrt(P) * V.T / np.sqrt(total)
    return _finish(stack(F), ch, P, P / sigma2 * total, "ZF")


def _interference_terms(stacked: StackedChannel, cross: np.ndarray) -> np.ndarray:
    """``sum over pairs at difference i`` of ``cross[path, block]`` for every used ``i``."""
    return np.array(
        [sum(cross[m, lp] for lp, m in stacked.groups[i]) for i in stacked.differences],
        dtype=complex,
    )


def mrt_beamformer(ch: MultipathChannel, P: float, sigma2: float) -> BeamformerResult:
    """ISI-MRT, ``f_bar = sqrt(P) h_bar / ||h_bar||``, with its residual-ISI SINR."""
    _check_budget(P, sigma2)
    stacked = effective_channels(ch)
    H = stacked.gains
    h_bar = stacked.h_bar
    energy = float(np.real(np.vdot(h_bar, h_bar)))
    if not energy > 0:
        raise ValueError("MRT needs a non-zero channel")
    gram = H.conj().T @ H
    # g_bar[i]^H h_bar for each used delay difference
    leak = _interference_terms(stacked, gram)
    isi = float(np.sum(np.abs(leak) ** 2)) / energy
    sinr = P * energy / (P * isi + sigma2)
    return _finish(np.sqrt(P) * h_bar / np.sqrt(energy), ch, P, sinr, "MRT")


def mmse_covariance(ch: MultipathChannel, P: float, sigma2: float) -> np.ndarray:
    """Dense interference-plus-noise covariance ``sum_i g_bar g_bar^H + sigma2/P I``."""
    stacked = effective_channels(ch)
    G = stacked.g_matrix()
    return G @ G.conj().T + (sigma2 / P) * np.eye(G.shape[0])


def _mmse_direction(stacked: StackedChannel, eps: float, method: str) -> np.ndarray:
    """Solve ``C x = h_bar`` with ``C = G G^H + eps I`` via Cholesky factorisations."""
    G = stacked.g_matrix()
    h_bar = stacked.h_bar
    n, d = G.shape
    if method == "auto":
        method = "dense" if n <= 2048 and 4 * d >= n else "lowrank"
    if method == "dense":
        C = G @ G.conj().T + eps * np.eye(n)
        cf = sla.cho_factor(C, lower=True, check_finite=True)
        return sla.cho_solve(cf, h_bar)
    if method == "lowrank":
        # (G G^H + eps I)^-1 h = (h - G (eps I + G^H G)^-1 G^H h) / eps
        if d == 0:
            return h_bar / eps
        A = G.conj().T @ G + eps * np.eye(d)
        cf = sla.cho_factor(A, lower=True, check_finite=True)
        w = sla.cho_solve(cf, G.conj().T @ h_bar)
        return (h_bar - G @ w) / eps
    raise ValueError(f"unknown MMSE solve method {method!r}")


def mmse_beamformer(ch: MultipathChannel, P: float, sigma2: float, method: str = "auto") -> BeamformerResult:
    """ISI-MMSE beamformer ``f_bar = sqrt(P) C^-1 h_bar / ||C^-1 h_bar||``.

    The SINR ``h_bar^H C^-1 h_bar`` is the maximum of the grouped-delay
    generalised Rayleigh quotient. ``method`` picks the Cholesky solve:
    ``"dense"`` factors the ``ML x ML`` matrix, ``"lowrank"`` factors the
    small ``D x D`` capacitance matrix of the Woodbury identity (``D`` being
    the number of used delay differences), ``"auto"`` chooses by size.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the covariance is not positive definite.
    """
    _check_budget(P, sigma2)
    stacked = effective_channels(ch)
    x = _mmse_direction(stacked, sigma2 / P, method)
    sinr = float(np.real(np.vdot(stacked.h_bar, x)))
    f_bar = np.sqrt(P) * x / np.linalg.norm(x)
    return _finish(f_bar, ch, P, sinr, "MMSE")


def sinr_of(f_bar: np.ndarray, ch: MultipathChannel, P: float, sigma2: float) -> float:
    """Grouped-delay SINR of an arbitrary stacked beamformer.

    ``|sum_l h_l^H f_l|^2 / (sum_i |sum_l' g_l'^H[i] f_l'|^2 + sigma2)``.
    """
    f_bar = np.asarray(f_bar, dtype=complex)
    used = float(np.real(np.vdot(f_bar, f_bar)))
    if used > P * (1.0 + POWER_SLACK):
        raise ValueError(f"beamformer power {used:.6g} exceeds budget {P:.6g}")
    stacked = effective_channels(ch)
    F = unstack(f_bar, ch.num_paths)
    cross = stacked.gains.conj().T @ F.T  # cross[m, l'] = h_m^H f_l'
    signal = abs(np.trace(cross)) ** 2
    isi = float(np.sum(np.abs(_interference_terms(stacked, cross)) ** 2)) if stacked.groups else 0.0
    denom = isi + sigma2
    if denom == 0:
        return np.inf if signal > 0 else 0.0
    return float(signal / denom)


def design(scheme: str, ch: MultipathChannel, P: float, sigma2: float) -> BeamformerResult:
    """Dispatch on ``scheme`` in ``{"ZF", "MRT", "MMSE"}``."""
    scheme = scheme.upper()
    if scheme == "ZF":
        return zf_beamformer(ch, P, sigma2)
    if scheme == "MRT":
        return mrt_beamformer(ch, P, sigma2)
    if scheme == "MMSE":
        return mmse_beamformer(ch, P, sigma2)
    raise ValueError(f"unknown scheme {scheme!r}")
