"""Delay alignment modulation (DAM) link-level simulator and beamforming library."""

__version__ = "0.1.0"

from .beamforming import (  # noqa: E402
    InfeasibleZF,
    LinkBudget,
    mmse_beamformer,
    mrt_beamformer,
    sinr_of,
    zf_beamformer,
)
from .channel import ChannelParams, GainModel, MultipathChannel, sample_channel  # noqa: E402
from .precoding import DamPrecoder, comp_delays, effective_channels  # noqa: E402

__all__ = [
    "InfeasibleZF",
    "LinkBudget",
    "zf_beamformer",
    "mrt_beamformer",
    "mmse_beamformer",
    "sinr_of",
    "ChannelParams",
    "GainModel",
    "MultipathChannel",
    "sample_channel",
    "DamPrecoder",
    "comp_delays",
    "effective_channels",
]
