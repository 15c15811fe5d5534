import numpy as np
import pytest

from nomavq import (
    AmcParams,
    ChannelState,
    load_rd_fixtures,
)

B_HZ = 140000.0
P_MAX_W = 1.0


@pytest.fixture(scope="session")
def streams_table():
    return load_rd_fixtures()


@pytest.fixture(scope="session")
def amc():
    return AmcParams()


def make_instance(rng, table, snr_db=20.0, weak_stream="Foreman",
                  strong_stream="Soccer", d_weak=(2.6, 3.8), d_strong=(0.7, 1.6)):
    """One random two-user instance: Rayleigh fading at given distances.

    Returns (channel, [weak stream params, strong stream params]).
    """
    noise = P_MAX_W / 10.0 ** (snr_db / 10.0)
    dw = rng.uniform(*d_weak)
    ds = rng.uniform(*d_strong)
    gains = []
    for d in (dw, ds):
        g = (rng.standard_normal() + 1j * rng.standard_normal()) * np.sqrt(0.5)
        gains.append(abs(g) ** 2 / (1.0 + d**2))
    order = np.argsort(gains)
    ch = ChannelState(
        gains_sq=np.sort(gains),
        noise_var=noise,
        bandwidth_hz=B_HZ,
        power_budget_w=P_MAX_W,
    )
    pair = [table[weak_stream], table[strong_stream]]
    streams = [pair[i] for i in order]
    return ch, streams


# acceptance criteria report: one line per criterion, printed at session end
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    def record(criterion, passed, detail):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"ACCEPTANCE {criterion}: {status} - {detail}")
        assert passed, f"criterion {criterion}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES,
                           key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
