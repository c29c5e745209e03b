import numpy as np
import pytest

from dam_sim.channel import ChannelParams, GainModel, channel_from_vectors, sample_channel


def rayleigh_channel(rng, M, L, max_delay=40):
    """i.i.d. CN(0, 1) gain vectors on distinct random delays."""
    delays = np.sort(rng.choice(max_delay + 1, size=L, replace=False))
    h = (rng.standard_normal((L, M)) + 1j * rng.standard_normal((L, M))) / np.sqrt(2)
    return channel_from_vectors(h, delays)


def unit_channel(seed, M, L=5):
    """Geometric channel with equal-power paths and unit total gain per antenna."""
    params = ChannelParams(M, L, gain_model=GainModel(tau_decay=np.inf, gain_db=0.0))
    return sample_channel(seed, params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
