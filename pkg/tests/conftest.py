import numpy as np
import pytest
from hypothesis import strategies as st

from nomafl.channel import ChannelSnapshot

ACCEPTANCE_LINES: list[str] = []


def random_snapshot(rng: np.random.Generator, n: int, noise_power: float = 1.0) -> ChannelSnapshot:
    """Budgets log-uniform over [0.1, 1e7] times the noise; random gains and transmit caps."""
    p_r_max = noise_power * 10 ** rng.uniform(-1, 7, size=n)
    p_t_max = rng.uniform(0.05, 0.5, size=n)
    return ChannelSnapshot.from_gains(p_r_max / p_t_max, p_t_max, noise_power)


@st.composite
def snapshots(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    exps = draw(st.lists(st.floats(-1.0, 7.0), min_size=n, max_size=n))
    noise = draw(st.sampled_from([1.0, 2e-12, 3.7]))
    return ChannelSnapshot.from_received([noise * 10 ** e for e in exps], noise)


gammas = st.sampled_from([0.25, 0.5, 1.0, 2.0, 3.0])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
