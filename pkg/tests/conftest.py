import time

import numpy as np
import pytest

from harvestkit import experiment, ingest, trafficnet

# Synthetic stand-in for the observed network: a 4x4 torus whose signal
# periods are spread over 8-16 steps, one bin per step.
SYNTH_STEPS = 16000
SYNTH_SEED = 0
SYNTH_PERIODS = (8.0, 16.0)
# Per-row penalty of about 0.08 on [0, 1]-scaled features at 12.8k training rows.
SYNTH_BETA = 1e3

ACCEPTANCE_LINES: list[str] = []
# wall time spent building each session fixture, charged to its first user
BUILD_SECONDS: dict[str, float] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _synthetic(switch_at=None):
    tpl = trafficnet.SignalTemplate(period_range=SYNTH_PERIODS)
    net, traj, log = experiment.simulate_log(
        4, 4, SYNTH_STEPS, SYNTH_SEED, template=tpl, switch_at=switch_at
    )
    events = experiment.crossing_to_events(log)
    m = ingest.bin_counts(events, 1.0, t0_s=0.0, t_end_s=float(SYNTH_STEPS))
    return net, m


@pytest.fixture(scope="session")
def synthetic_series():
    t = time.perf_counter()
    m = _synthetic()[1]
    BUILD_SECONDS["synthetic"] = time.perf_counter() - t
    return m


@pytest.fixture(scope="session")
def nonstationary_series():
    t = time.perf_counter()
    m = _synthetic(switch_at=SYNTH_STEPS // 2)[1]
    BUILD_SECONDS["nonstationary"] = time.perf_counter() - t
    return m


@pytest.fixture(scope="session")
def small_net():
    return trafficnet.build_lattice(3, 3, seed=7)
