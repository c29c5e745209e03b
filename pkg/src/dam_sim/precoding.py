"""Delay pre-compensation and the delay-difference effective channels.

With compensation delays ``kappa_l = n_max - n_l`` every path's copy of the
symbol stream reaches the receiver at the same delay ``n_max``. What is left
is interference from pairs ``(l', l)`` with ``l != l'``; symbol
``s[n - n_max + i]`` leaks in through the pairs whose delay difference
``n_l' - n_l`` equals ``i``. Grouping those pairs gives the stacked effective
channels ``g_bar[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import MultipathChannel

__all__ = [
    "DamPrecoder",
    "StackedChannel",
    "comp_delays",
    "effective_channels",
    "transmit_power",
    "stack",
    "unstack",
]

POWER_SLACK = 1e-9


def comp_delays(ch: MultipathChannel) -> np.ndarray:
    """Per-path pre-compensation delays ``kappa_l = n_max - n_l``."""
    d = ch.delays
    return d.max() - d


@dataclass(frozen=True)
class DamPrecoder:
    """Per-path beamformers (``L x M``, row ``l`` is ``f_l``) and delays."""

    beamformers: np.ndarray
    comp_delays: np.ndarray
    power: float

    def __post_init__(self) -> None:
        f = np.array(self.beamformers, dtype=complex)
        k = np.array(self.comp_delays, dtype=int)
        if f.ndim != 2 or f.shape[0] != k.shape[0]:
            raise ValueError(f"beamformers {f.shape} do not match {k.shape[0]} compensation delays")
        if np.any(k < 0):
            raise ValueError("compensation delays must be non-negative")
        if len(set(k.tolist())) != len(k):
            raise ValueError("compensation delays must be pairwise distinct")
        used = float(np.sum(np.abs(f) ** 2))
        if used > self.power * (1.0 + POWER_SLACK):
            raise ValueError(f"beamformer power {used:.6g} exceeds budget {self.power:.6g}")
        f.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "beamformers", f)
        object.__setattr__(self, "comp_delays", k)

    @property
    def num_paths(self) -> int:
        return self.beamformers.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.beamformers.shape[1]

    @property
    def f_bar(self) -> np.ndarray:
        return stack(self.beamformers)


def transmit_power(pre: DamPrecoder) -> float:
    """``sum_l ||f_l||^2``, the per-sample transmit power for unit-power i.i.d. symbols."""
    return float(np.sum(np.abs(pre.beamformers) ** 2))


def stack(blocks: np.ndarray) -> np.ndarray:
    """``L x M`` -> length ``M L`` (block ``l`` holds row ``l``)."""
    return np.asarray(blocks).reshape(-1)


def unstack(vec: np.ndarray, num_paths: int) -> np.ndarray:
    return np.asarray(vec).reshape(num_paths, -1)


@dataclass(frozen=True)
class StackedChannel:
    """``h_bar`` plus the sparse ``g_bar[i]`` family.

    ``groups[i]`` lists ``(block, path)`` pairs: block ``l'`` of ``g_bar[i]``
    is ``h_path`` where ``n_l' - n_path = i``. Blocks not listed are zero.
    """

    gains: np.ndarray
    delays: np.ndarray
    groups: dict[int, tuple[tuple[int, int], ...]] = field(default_factory=dict)

    @property
    def num_paths(self) -> int:
        return self.gains.shape[1]

    @property
    def num_antennas(self) -> int:
        return self.gains.shape[0]

    @property
    def h_bar(self) -> np.ndarray:
        return stack(self.gains.T)

    @property
    def differences(self) -> list[int]:
        return sorted(self.groups)

    def g_bar(self, i: int) -> np.ndarray:
        """Dense ``g_bar[i]`` of length ``M L`` (zero for unused ``i``)."""
        if i == 0:
            raise ValueError("g_bar[0] is not defined")
        M, L = self.gains.shape
        out = np.zeros((L, M), dtype=complex)
        for block, path in self.groups.get(i, ()):
            out[block] = self.gains[:, path]
        return stack(out)

    def g_matrix(self) -> np.ndarray:
        """``M L x D`` matrix with one dense ``g_bar[i]`` per used difference."""
        if not self.groups:
            return np.zeros((self.num_antennas * self.num_paths, 0), dtype=complex)
        return np.stack([self.g_bar(i) for i in self.differences], axis=1)


def effective_channels(ch: MultipathChannel) -> StackedChannel:
    """Group interfering path pairs by delay difference.

    For ``L = 1`` the family is empty.
    """
    delays = ch.delays
    L = len(delays)
    groups: dict[int, list[tuple[int, int]]] = {}
    for lp in range(L):
        for l in range(L):
            if l == lp:
                continue
            i = int(delays[lp] - delays[l])
            groups.setdefault(i, []).append((lp, l))
    for i, pairs in groups.items():
        blocks = [b for b, _ in pairs]
        # distinct delays make the source path of every block unique
        assert len(blocks) == len(set(blocks)), f"block assigned twice at difference {i}"
    return StackedChannel(
        ch.gain_matrix,
        delays,
        {i: tuple(pairs) for i, pairs in sorted(groups.items())},
    )
